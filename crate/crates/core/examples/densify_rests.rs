//! Pads a sparse sequence with RESTs so a control surfaces close to its
//! anticipated time.

use anticipation::event::{Event, OrderMode};
use anticipation::{densify, interleave, ControlSequence, EventSequence};

fn main() -> anticipation::Result<()> {
    let note = |t| Event::from_raw(t, 50, 60);
    let events = EventSequence::new(vec![note(100)?, note(200)?, note(500)?], OrderMode::Reject)?;
    let controls = ControlSequence::new(vec![Event::from_raw(450, 30, 72)?], OrderMode::Reject)?;
    let delta = 200;

    let sparse = interleave(&events, &controls, delta);
    let dense = densify(&events, 100);
    let padded = interleave(&dense, &controls, delta);
    for (label, seq) in [("sparse", &sparse), ("densified", &padded)] {
        let shape: String = seq.items().iter().map(|i| if i.is_control() { 'u' } else { 'e' }).collect();
        println!("{label:>10}: {shape}");
    }
    // the control now follows the REST at 300 instead of the note at 500
    for item in padded.items() {
        println!("  {}{}", if item.is_control() { "C " } else { "" }, item.event);
    }
    Ok(())
}
