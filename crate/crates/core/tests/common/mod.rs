//! Random instance generators shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use anticipation::event::{Event, EventSequence, OrderMode, DRUMS};
use anticipation::{ControlSequence, InterleavedSequence, Item};
use rand::seq::IndexedRandom;
use rand::Rng;

pub fn note(t: u32, d: u32, code: u32) -> Event {
    Event::from_raw(t, d, code).unwrap()
}

/// `n` sorted events with times below `max_time`.
pub fn random_events<R: Rng>(rng: &mut R, n: usize, max_time: u32) -> EventSequence {
    let mut times: Vec<u32> = (0..n).map(|_| rng.random_range(0..max_time)).collect();
    times.sort_unstable();
    let events = times
        .into_iter()
        .map(|t| note(t, rng.random_range(0..1000), rng.random_range(0..16_512)))
        .collect();
    EventSequence::new(events, OrderMode::Reject).unwrap()
}

pub fn random_controls<R: Rng>(rng: &mut R, k: usize, max_time: u32) -> ControlSequence {
    let seq = random_events(rng, k, max_time);
    ControlSequence::new(seq.into_events(), OrderMode::Reject).unwrap()
}

/// Arbitrary items (any order, RESTs only among plain events) with times
/// below 10000.
pub fn random_items<R: Rng>(rng: &mut R, n: usize) -> InterleavedSequence {
    let items = (0..n)
        .map(|_| {
            let t = rng.random_range(0..10_000);
            if rng.random_bool(0.3) {
                Item::control(note(t, rng.random_range(0..1000), rng.random_range(0..16_512)))
            } else if rng.random_bool(0.1) {
                Item::event(Event::rest(t))
            } else {
                Item::event(note(t, rng.random_range(0..1000), rng.random_range(0..16_512)))
            }
        })
        .collect();
    InterleavedSequence::from_items(items)
}

/// A sequence the interarrival codec reproduces exactly: onset gaps below
/// 1000 ticks and no overlapping notes of the same code.
pub fn interarrival_safe<R: Rng>(rng: &mut R, n: usize) -> EventSequence {
    let mut t = rng.random_range(0..1000);
    let mut busy_until: HashMap<u32, u32> = HashMap::new();
    let mut events = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            t += rng.random_range(0..1000);
        }
        let code = loop {
            let c = rng.random_range(0..16_512);
            if busy_until.get(&c).is_none_or(|&end| end <= t) {
                break c;
            }
        };
        let d = rng.random_range(0..1000);
        busy_until.insert(code, t + d);
        events.push(note(t, d, code));
    }
    EventSequence::new(events, OrderMode::Reject).unwrap()
}

/// A REST-free sequence a MIDI file can hold exactly: at most six melodic
/// instruments plus drums, no overlapping notes of the same code.
pub fn midi_safe<R: Rng>(rng: &mut R, n: usize) -> EventSequence {
    let mut pool: Vec<u32> = (0..128).collect();
    let melodic: Vec<u32> = (0..rng.random_range(1..=6))
        .map(|_| {
            let i = rng.random_range(0..pool.len());
            pool.swap_remove(i)
        })
        .collect();
    let mut instruments = melodic;
    instruments.push(u32::from(DRUMS));
    let mut times: Vec<u32> = (0..n).map(|_| rng.random_range(0..60_000)).collect();
    times.sort_unstable();
    let mut busy_until: HashMap<u32, u32> = HashMap::new();
    let mut events = Vec::with_capacity(n);
    for t in times {
        for _ in 0..20 {
            let k = *instruments.choose(rng).unwrap();
            let code = k * 128 + rng.random_range(0..128);
            if busy_until.get(&code).is_none_or(|&end| end <= t) {
                let d = rng.random_range(0..1000);
                busy_until.insert(code, t + d);
                events.push(note(t, d, code));
                break;
            }
        }
    }
    EventSequence::new(events, OrderMode::Reject).unwrap()
}

pub fn shape(seq: &InterleavedSequence) -> String {
    seq.items()
        .iter()
        .map(|i| if i.is_control() { 'u' } else { 'e' })
        .collect()
}
