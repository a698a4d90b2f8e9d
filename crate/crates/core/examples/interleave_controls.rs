//! Places a control among events so that its position depends only on the
//! past, then compares with the naive sort by `s - delta`.

use anticipation::anticipation::sort_order_interleave;
use anticipation::event::{Event, OrderMode};
use anticipation::{interleave, split_and_sort, ControlSequence, EventSequence, InterleavedSequence};

fn show(label: &str, seq: &InterleavedSequence) {
    println!("{label}:");
    for item in seq.items() {
        let tag = if item.is_control() { "C " } else { "  " };
        println!("  {tag}{}", item.event);
    }
}

fn main() -> anticipation::Result<()> {
    let note = |t| Event::from_raw(t, 50, 60);
    let events = EventSequence::new(vec![note(100)?, note(300)?, note(500)?], OrderMode::Reject)?;
    let controls = ControlSequence::new(vec![Event::from_raw(700, 50, 4 * 128 + 72)?], OrderMode::Reject)?;
    let delta = 500; // 5 s

    let anticipated = interleave(&events, &controls, delta);
    show("anticipatory", &anticipated);
    show("sorted by s - delta", &sort_order_interleave(&events, &controls, delta));

    let merged = split_and_sort(&anticipated);
    println!("split and sorted back: {} events", merged.len());
    Ok(())
}
