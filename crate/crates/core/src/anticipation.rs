//! Interleaving of events and controls.
//!
//! A control on time `s` is placed immediately after the first event whose
//! time is at least `s - delta` (and after any controls queued before it).
//! That position is decidable from the prefix alone, which is what lets the
//! samplers in [`crate::sampler`] reproduce the offline ordering online.

use std::ops::Add;

use crate::error::{Error, Result};
use crate::event::{ControlSequence, Event, EventSequence, TICKS_PER_SECOND};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnticipationConfig {
    /// Anticipation interval in seconds.
    pub delta: f64,
    /// Target density for REST insertion, in seconds.
    pub target_density: f64,
}

impl Default for AnticipationConfig {
    fn default() -> Self {
        AnticipationConfig {
            delta: 5.0,
            target_density: 1.0,
        }
    }
}

impl AnticipationConfig {
    pub fn new(delta: f64, target_density: f64) -> Result<Self> {
        let config = AnticipationConfig {
            delta,
            target_density,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::invalid(format!("delta must be > 0, got {}", self.delta)));
        }
        if !(self.target_density.is_finite() && self.target_density > 0.0) {
            return Err(Error::invalid(format!(
                "target density must be > 0, got {}",
                self.target_density
            )));
        }
        Ok(())
    }

    pub fn delta_ticks(&self) -> u32 {
        seconds_as_ticks(self.delta)
    }

    pub fn density_ticks(&self) -> u32 {
        seconds_as_ticks(self.target_density).max(1)
    }
}

pub(crate) fn seconds_as_ticks(seconds: f64) -> u32 {
    (seconds * f64::from(TICKS_PER_SECOND)).round().max(0.0) as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Event,
    Control,
}

/// One element of an interleaved sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Item {
    pub event: Event,
    pub tag: Tag,
}

impl Item {
    pub fn event(event: Event) -> Self {
        Item {
            event,
            tag: Tag::Event,
        }
    }

    pub fn control(event: Event) -> Self {
        Item {
            event,
            tag: Tag::Control,
        }
    }

    pub fn is_control(&self) -> bool {
        self.tag == Tag::Control
    }
}

/// Events and anticipated controls in model order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterleavedSequence {
    items: Vec<Item>,
}

impl InterleavedSequence {
    /// Validates that plain times and control times are each non-decreasing.
    pub fn new(items: Vec<Item>) -> Result<Self> {
        let seq = InterleavedSequence { items };
        if !seq.is_time_ordered() {
            return Err(Error::invalid(
                "plain events and controls must each be non-decreasing in time",
            ));
        }
        Ok(seq)
    }

    /// Wraps items without checking time order (decoded model output may be
    /// arbitrary).
    pub fn from_items(items: Vec<Item>) -> Self {
        InterleavedSequence { items }
    }

    pub fn from_events(events: &EventSequence) -> Self {
        InterleavedSequence {
            items: events.iter().copied().map(Item::event).collect(),
        }
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn into_items(self) -> Vec<Item> {
        self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn has_controls(&self) -> bool {
        self.items.iter().any(Item::is_control)
    }

    pub fn control_count(&self) -> usize {
        self.items.iter().filter(|i| i.is_control()).count()
    }

    pub fn is_time_ordered(&self) -> bool {
        let ordered = |tag: Tag| {
            let mut last = 0;
            self.items.iter().filter(|i| i.tag == tag).all(|i| {
                let ok = i.event.time >= last;
                last = i.event.time;
                ok
            })
        };
        ordered(Tag::Event) && ordered(Tag::Control)
    }

    /// Plain events in order, controls dropped.
    pub fn plain_events(&self) -> EventSequence {
        EventSequence::from_sorted_or_raw(
            self.items
                .iter()
                .filter(|i| !i.is_control())
                .map(|i| i.event)
                .collect(),
        )
    }

    pub fn controls(&self) -> Vec<Event> {
        self.items
            .iter()
            .filter(|i| i.is_control())
            .map(|i| i.event)
            .collect()
    }

    pub fn push(&mut self, item: Item) {
        self.items.push(item);
    }
}

impl EventSequence {
    fn from_sorted_or_raw(events: Vec<Event>) -> Self {
        if events.windows(2).all(|w| w[0].time <= w[1].time) {
            EventSequence::from_sorted(events)
        } else {
            EventSequence::new(events, crate::event::OrderMode::Sort)
                .expect("sorting cannot fail")
        }
    }
}

/// Inserts REST events so that no gap between adjacent events exceeds
/// `target` ticks. A gap `g` with `n*target < g <= (n+1)*target` receives `n`
/// RESTs at `t + target, ..., t + n*target`.
///
/// # Panics
///
/// Panics if `target` is zero.
pub fn densify(seq: &EventSequence, target: u32) -> EventSequence {
    assert!(target > 0, "target density must be positive");
    let events = seq.events();
    let mut out = Vec::with_capacity(events.len());
    for (i, event) in events.iter().enumerate() {
        out.push(*event);
        if let Some(next) = events.get(i + 1) {
            let gap = next.time - event.time;
            if gap > 0 {
                let n = (gap - 1) / target;
                out.extend((1..=n).map(|m| Event::rest(event.time + m * target)));
            }
        }
    }
    EventSequence::from_sorted(out)
}

/// Position of an item in an interleaved ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Event(usize),
    Control(usize),
}

fn check_sorted<T: PartialOrd>(times: &[T], what: &str) -> Result<()> {
    match times.windows(2).position(|w| !(w[0] <= w[1])) {
        Some(i) => Err(Error::invalid(format!("{what} times unsorted at index {}", i + 1))),
        None => Ok(()),
    }
}

/// Anticipatory ordering over arbitrary time values (ticks or continuous
/// seconds). Each control follows the first event with `t + delta >= s`;
/// controls never reached are appended after the last event.
pub fn interleave_order<T>(event_times: &[T], control_times: &[T], delta: T) -> Result<Vec<Slot>>
where
    T: PartialOrd + Copy + Add<Output = T>,
{
    check_sorted(event_times, "event")?;
    check_sorted(control_times, "control")?;
    let mut out = Vec::with_capacity(event_times.len() + control_times.len());
    let mut k = 0;
    for (j, &t) in event_times.iter().enumerate() {
        out.push(Slot::Event(j));
        while k < control_times.len() && t + delta >= control_times[k] {
            out.push(Slot::Control(k));
            k += 1;
        }
    }
    out.extend((k..control_times.len()).map(Slot::Control));
    Ok(out)
}

/// Interleaves `controls` into `events` with anticipation interval `delta`
/// (ticks).
pub fn interleave(
    events: &EventSequence,
    controls: &ControlSequence,
    delta: u32,
) -> InterleavedSequence {
    let event_times: Vec<u32> = events.iter().map(|e| e.time).collect();
    let control_times: Vec<u32> = controls.controls().iter().map(|c| c.time).collect();
    let order = interleave_order(&event_times, &control_times, delta)
        .expect("sequence types are sorted by construction");
    let items = order
        .into_iter()
        .map(|slot| match slot {
            Slot::Event(j) => Item::event(events.events()[j]),
            Slot::Control(k) => Item::control(controls.controls()[k]),
        })
        .collect();
    InterleavedSequence { items }
}

/// The naive merge that files a control as if it were an event at `s - delta`.
/// Its positions are not stopping times; kept for comparison only.
pub fn sort_order_interleave(
    events: &EventSequence,
    controls: &ControlSequence,
    delta: u32,
) -> InterleavedSequence {
    let mut items = Vec::with_capacity(events.len() + controls.len());
    let mut k = 0;
    let cs = controls.controls();
    for e in events.iter() {
        // controls whose shifted time falls before this event go first
        while k < cs.len() && i64::from(cs[k].time) - i64::from(delta) < i64::from(e.time) {
            items.push(Item::control(cs[k]));
            k += 1;
        }
        items.push(Item::event(*e));
    }
    items.extend(cs[k..].iter().copied().map(Item::control));
    InterleavedSequence { items }
}

/// Online view of the control sequence used during generation.
#[derive(Debug, Clone)]
pub struct ControlCursor<'a> {
    controls: &'a [Event],
    next: usize,
}

impl<'a> ControlCursor<'a> {
    pub fn new(controls: &'a ControlSequence) -> Self {
        ControlCursor {
            controls: controls.controls(),
            next: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.next
    }

    pub fn remaining(&self) -> &'a [Event] {
        &self.controls[self.next..]
    }

    pub fn is_exhausted(&self) -> bool {
        self.next >= self.controls.len()
    }

    /// Consumes and returns every remaining control.
    pub fn drain(&mut self) -> &'a [Event] {
        let rest = &self.controls[self.next..];
        self.next = self.controls.len();
        rest
    }
}

/// Controls to emit after an event at `last_event_time`: the maximal prefix of
/// unconsumed controls with `time <= last_event_time + delta`. `None` stands
/// for the start of a sequence (time minus infinity), where nothing is due.
pub fn next_anticipated_controls<'a>(
    last_event_time: Option<u32>,
    cursor: &mut ControlCursor<'a>,
    delta: u32,
) -> &'a [Event] {
    let Some(t) = last_event_time else {
        return &[];
    };
    let start = cursor.next;
    let horizon = u64::from(t) + u64::from(delta);
    while cursor.next < cursor.controls.len()
        && u64::from(cursor.controls[cursor.next].time) <= horizon
    {
        cursor.next += 1;
    }
    &cursor.controls[start..cursor.next]
}

/// Maps controls back to events and restores time order. Equal-time events are
/// ordered canonically (see [`Event::canonical_key`]).
pub fn split_and_sort(seq: &InterleavedSequence) -> EventSequence {
    let mut events: Vec<Event> = seq.items.iter().map(|i| i.event).collect();
    events.sort_by_key(Event::canonical_key);
    EventSequence::from_sorted(events)
}

/// Splits `seq` into plain events and controls according to `mask`.
pub fn split_by_mask(seq: &EventSequence, mask: &[bool]) -> Result<(EventSequence, ControlSequence)> {
    if mask.len() != seq.len() {
        return Err(Error::invalid(format!(
            "mask length {} does not match sequence length {}",
            mask.len(),
            seq.len()
        )));
    }
    let mut plain = Vec::new();
    let mut controls = Vec::new();
    for (event, &marked) in seq.iter().zip(mask) {
        if marked && !event.is_rest() {
            controls.push(*event);
        } else {
            plain.push(*event);
        }
    }
    Ok((
        EventSequence::from_sorted(plain),
        ControlSequence::new(controls, crate::event::OrderMode::Reject)?,
    ))
}
