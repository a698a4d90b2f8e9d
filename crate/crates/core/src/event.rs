//! Quantized events, controls and the note/time codecs shared by every other module.
//!
//! Times are stored as absolute 10 ms ticks from the start of a sequence. The
//! token vocabularies can only express times below [`MAX_TIME`], so the
//! bounded [`QuantizedTime`] is produced when a window of events is
//! relativized for tokenization.

use std::fmt;

use crate::error::{Error, Result};

/// Ticks per second; one tick is 10 ms.
pub const TICKS_PER_SECOND: u32 = 100;
/// Exclusive upper bound of a token-space time (100 s).
pub const MAX_TIME: u32 = 10_000;
/// Exclusive upper bound of a duration (10 s).
pub const MAX_DURATION: u32 = 1_000;
/// Number of instrument/pitch combinations.
pub const NOTE_CODES: u32 = 16_512;
/// Instrument code used for the MIDI percussion channel.
pub const DRUMS: u8 = 128;

/// A time in 10 ms units inside the token range `[0, 9999]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QuantizedTime(u16);

impl QuantizedTime {
    pub fn new(value: u32) -> Result<Self> {
        if value < MAX_TIME {
            Ok(QuantizedTime(value as u16))
        } else {
            Err(Error::invalid(format!("time {value} exceeds {}", MAX_TIME - 1)))
        }
    }

    pub fn get(self) -> u32 {
        u32::from(self.0)
    }
}

/// A duration in 10 ms units, `[0, 999]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct QuantizedDuration(u16);

impl QuantizedDuration {
    pub const ZERO: QuantizedDuration = QuantizedDuration(0);
    pub const MAX: QuantizedDuration = QuantizedDuration((MAX_DURATION - 1) as u16);

    pub fn new(value: u32) -> Result<Self> {
        if value < MAX_DURATION {
            Ok(QuantizedDuration(value as u16))
        } else {
            Err(Error::invalid(format!(
                "duration {value} exceeds {}",
                MAX_DURATION - 1
            )))
        }
    }

    /// Builds a duration, clamping anything longer than 10 s.
    pub fn clamped(value: u32) -> Self {
        QuantizedDuration(value.min(MAX_DURATION - 1) as u16)
    }

    pub fn get(self) -> u32 {
        u32::from(self.0)
    }
}

/// Combined instrument and pitch, `128 * instrument + pitch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NoteCode(u16);

impl NoteCode {
    pub fn new(value: u32) -> Result<Self> {
        if value < NOTE_CODES {
            Ok(NoteCode(value as u16))
        } else {
            Err(Error::invalid(format!(
                "note code {value} exceeds {}",
                NOTE_CODES - 1
            )))
        }
    }

    pub fn get(self) -> u32 {
        u32::from(self.0)
    }

    pub fn instrument(self) -> u8 {
        (self.0 / 128) as u8
    }

    pub fn pitch(self) -> u8 {
        (self.0 % 128) as u8
    }

    pub fn is_drum(self) -> bool {
        self.instrument() == DRUMS
    }
}

/// The mark of an event: a pitched note or a REST placeholder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Note {
    Pitched(NoteCode),
    Rest,
}

impl Note {
    pub fn code(self) -> Option<NoteCode> {
        match self {
            Note::Pitched(code) => Some(code),
            Note::Rest => None,
        }
    }

    pub fn instrument(self) -> Option<u8> {
        self.code().map(NoteCode::instrument)
    }
}

/// A quantized `(time, duration, note)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    /// Onset in 10 ms ticks from the start of the sequence.
    pub time: u32,
    pub duration: QuantizedDuration,
    pub note: Note,
}

impl Event {
    pub fn new(time: u32, duration: QuantizedDuration, note: NoteCode) -> Self {
        Event {
            time,
            duration,
            note: Note::Pitched(note),
        }
    }

    /// Convenience constructor from raw integers, validating each field.
    pub fn from_raw(time: u32, duration: u32, note: u32) -> Result<Self> {
        Ok(Event::new(
            time,
            QuantizedDuration::new(duration)?,
            NoteCode::new(note)?,
        ))
    }

    /// REST events always carry a zero duration.
    pub fn rest(time: u32) -> Self {
        Event {
            time,
            duration: QuantizedDuration::ZERO,
            note: Note::Rest,
        }
    }

    pub fn is_rest(&self) -> bool {
        self.note == Note::Rest
    }

    /// Time at which the note ends, in ticks.
    pub fn end(&self) -> u32 {
        self.time + self.duration.get()
    }

    /// Total order used wherever ties between equal-time events must be
    /// broken deterministically.
    pub fn canonical_key(&self) -> (u32, Note, QuantizedDuration) {
        (self.time, self.note, self.duration)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.note {
            Note::Pitched(code) => write!(f, "{} {} {}", self.time, self.duration.get(), code.get()),
            Note::Rest => write!(f, "{} {} R", self.time, self.duration.get()),
        }
    }
}

/// How a sequence constructor treats out-of-order input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderMode {
    /// Fail with an invalid-input error.
    Reject,
    /// Stable-sort by time.
    Sort,
}

fn order_events(mut events: Vec<Event>, mode: OrderMode, what: &str) -> Result<Vec<Event>> {
    if let Some(i) = events.windows(2).position(|w| w[0].time > w[1].time) {
        match mode {
            OrderMode::Reject => {
                return Err(Error::invalid(format!(
                    "{what} out of order at index {}: {} > {}",
                    i + 1,
                    events[i].time,
                    events[i + 1].time
                )))
            }
            OrderMode::Sort => events.sort_by_key(|e| e.time),
        }
    }
    Ok(events)
}

/// Time-ordered plain events.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventSequence {
    events: Vec<Event>,
}

impl EventSequence {
    pub fn new(events: Vec<Event>, mode: OrderMode) -> Result<Self> {
        Ok(EventSequence {
            events: order_events(events, mode, "event")?,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub(crate) fn from_sorted(events: Vec<Event>) -> Self {
        debug_assert!(events.windows(2).all(|w| w[0].time <= w[1].time));
        EventSequence { events }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Event> {
        self.events.iter()
    }

    /// Reorders equal-time events by note then duration. Two sequences holding
    /// the same multiset of events are equal after canonicalization.
    pub fn canonicalize(&mut self) {
        self.events.sort_by_key(Event::canonical_key);
    }

    pub fn canonicalized(mut self) -> Self {
        self.canonicalize();
        self
    }

    pub fn without_rests(&self) -> Self {
        EventSequence {
            events: self.events.iter().filter(|e| !e.is_rest()).copied().collect(),
        }
    }

    /// End of the last sounding note in ticks (0 when empty).
    pub fn end_time(&self) -> u32 {
        self.events.iter().map(Event::end).max().unwrap_or(0)
    }

    /// Length of the music in seconds, measured to the last note offset.
    pub fn seconds(&self) -> f64 {
        f64::from(self.end_time()) / f64::from(TICKS_PER_SECOND)
    }

    /// Distinct instrument codes, ascending.
    pub fn instruments(&self) -> Vec<u8> {
        let mut seen: Vec<u8> = self.events.iter().filter_map(|e| e.note.instrument()).collect();
        seen.sort_unstable();
        seen.dedup();
        seen
    }
}

impl<'a> IntoIterator for &'a EventSequence {
    type Item = &'a Event;
    type IntoIter = std::slice::Iter<'a, Event>;

    fn into_iter(self) -> Self::IntoIter {
        self.events.iter()
    }
}

/// Time-ordered control events. RESTs are never controls.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ControlSequence {
    controls: Vec<Event>,
}

impl ControlSequence {
    pub fn new(controls: Vec<Event>, mode: OrderMode) -> Result<Self> {
        if let Some(i) = controls.iter().position(Event::is_rest) {
            return Err(Error::invalid(format!("control {i} is a REST")));
        }
        Ok(ControlSequence {
            controls: order_events(controls, mode, "control")?,
        })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn controls(&self) -> &[Event] {
        &self.controls
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }
}

fn check_seconds(seconds: f64) -> Result<()> {
    if !seconds.is_finite() || seconds < 0.0 {
        return Err(Error::invalid(format!(
            "time must be finite and non-negative, got {seconds}"
        )));
    }
    Ok(())
}

/// Unbounded tick count for a non-negative time in seconds.
pub fn seconds_to_ticks(seconds: f64) -> Result<u32> {
    check_seconds(seconds)?;
    let ticks = (seconds * f64::from(TICKS_PER_SECOND)).round();
    if ticks > f64::from(u32::MAX) {
        return Err(Error::invalid(format!("time {seconds}s is too large")));
    }
    Ok(ticks as u32)
}

pub fn ticks_to_seconds(ticks: u32) -> f64 {
    f64::from(ticks) / f64::from(TICKS_PER_SECOND)
}

/// Rounds to the nearest 10 ms (halves away from zero), clamping to 99.99 s.
pub fn quantize_time(seconds: f64) -> Result<QuantizedTime> {
    let ticks = seconds_to_ticks(seconds)?;
    Ok(QuantizedTime(ticks.min(MAX_TIME - 1) as u16))
}

/// Rounds to the nearest 10 ms, clamping to 9.99 s.
pub fn quantize_duration(seconds: f64) -> Result<QuantizedDuration> {
    Ok(QuantizedDuration::clamped(seconds_to_ticks(seconds)?))
}

pub fn encode_note(instrument: u32, pitch: u32) -> Result<NoteCode> {
    if instrument > u32::from(DRUMS) {
        return Err(Error::invalid(format!("instrument {instrument} outside [0, 128]")));
    }
    if pitch > 127 {
        return Err(Error::invalid(format!("pitch {pitch} outside [0, 127]")));
    }
    Ok(NoteCode((128 * instrument + pitch) as u16))
}

pub fn decode_note(code: u32) -> Result<(u8, u8)> {
    let code = NoteCode::new(code)?;
    Ok((code.instrument(), code.pitch()))
}
