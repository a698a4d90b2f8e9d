//! Standard MIDI File reading and writing.
//!
//! Only what the event model needs is interpreted: notes, program changes and
//! tempo. Everything else is skipped.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::event::{
    seconds_to_ticks, Event, EventSequence, Note, NoteCode, OrderMode, QuantizedDuration, DRUMS,
    TICKS_PER_SECOND,
};

pub const DRUM_CHANNEL: u8 = 9;
pub const DEFAULT_TEMPO: u32 = 500_000;
/// Resolution used by [`write_midi`].
pub const WRITE_DIVISION: u16 = 480;

/// Timing division from the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Division {
    TicksPerQuarter(u16),
    /// SMPTE frames per second and ticks per frame.
    Smpte { fps: u8, ticks_per_frame: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    NoteOn { pitch: u8, velocity: u8 },
    NoteOff { pitch: u8 },
    ProgramChange { program: u8 },
    Tempo { micros_per_quarter: u32 },
    Other,
}

/// One decoded track record with its absolute tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrackEvent {
    pub tick: u64,
    pub channel: u8,
    pub kind: MessageKind,
}

/// Raw content of a Standard MIDI File.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiFile {
    pub format: u16,
    pub division: Division,
    pub tracks: Vec<Vec<TrackEvent>>,
}

/// Diagnostics from [`parse_midi_with_report`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseReport {
    /// Note-ons never closed by a note-off; their duration is clamped to 10 s.
    pub unpaired_note_ons: usize,
    /// Note-offs with no matching open note.
    pub stray_note_offs: usize,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, message: impl Into<String>) -> Error {
        Error::MidiParse {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(format!("unexpected end of data reading {n} bytes")));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32> {
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(self.err("variable-length quantity longer than 4 bytes"))
    }
}

/// Reads the chunk structure and every track's records.
pub fn read_midi_file(bytes: &[u8]) -> Result<MidiFile> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != b"MThd" {
        return Err(Error::MidiParse {
            offset: 0,
            message: "missing MThd header".into(),
        });
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(r.err(format!("header length {header_len} < 6")));
    }
    let header_start = r.pos;
    let format = r.u16()?;
    let ntracks = r.u16()?;
    let raw_division = r.u16()?;
    r.pos = header_start;
    r.take(header_len)?;
    if format > 1 {
        return Err(Error::MidiParse {
            offset: 8,
            message: format!("format {format} files are not supported"),
        });
    }
    let division = if raw_division & 0x8000 == 0 {
        if raw_division == 0 {
            return Err(Error::MidiParse {
                offset: 12,
                message: "zero ticks per quarter note".into(),
            });
        }
        Division::TicksPerQuarter(raw_division)
    } else {
        let fps = (-((raw_division >> 8) as u8 as i8)) as u8;
        let ticks_per_frame = (raw_division & 0xff) as u8;
        if fps == 0 || ticks_per_frame == 0 {
            return Err(Error::MidiParse {
                offset: 12,
                message: "invalid SMPTE division".into(),
            });
        }
        Division::Smpte {
            fps,
            ticks_per_frame,
        }
    };

    let mut tracks = Vec::with_capacity(usize::from(ntracks));
    while tracks.len() < usize::from(ntracks) {
        let chunk_start = r.pos;
        let id = r.take(4)?;
        let len = r.u32()? as usize;
        if r.bytes.len() - r.pos < len {
            return Err(Error::MidiParse {
                offset: chunk_start,
                message: format!("chunk length {len} runs past end of file"),
            });
        }
        let body = &r.bytes[r.pos..r.pos + len];
        let body_offset = r.pos;
        r.pos += len;
        if id == b"MTrk" {
            tracks.push(read_track(body, body_offset)?);
        }
    }
    Ok(MidiFile {
        format,
        division,
        tracks,
    })
}

fn read_track(body: &[u8], base: usize) -> Result<Vec<TrackEvent>> {
    let mut r = Reader { bytes: body, pos: 0 };
    let shift = |e: Error| match e {
        Error::MidiParse { offset, message } => Error::MidiParse {
            offset: offset + base,
            message,
        },
        other => other,
    };
    let mut out = Vec::new();
    let mut tick = 0u64;
    let mut running: Option<u8> = None;
    while r.pos < body.len() {
        tick += u64::from(r.vlq().map_err(shift)?);
        let first = r.u8().map_err(shift)?;
        let (status, first_data) = if first & 0x80 != 0 {
            (first, None)
        } else {
            match running {
                Some(s) => (s, Some(first)),
                None => {
                    r.pos -= 1;
                    return Err(shift(r.err("data byte without running status")));
                }
            }
        };
        match status {
            0xff => {
                running = None;
                let kind = r.u8().map_err(shift)?;
                let len = r.vlq().map_err(shift)? as usize;
                let data = r.take(len).map_err(shift)?;
                if kind == 0x51 && len == 3 {
                    let micros =
                        u32::from(data[0]) << 16 | u32::from(data[1]) << 8 | u32::from(data[2]);
                    out.push(TrackEvent {
                        tick,
                        channel: 0,
                        kind: MessageKind::Tempo {
                            micros_per_quarter: micros,
                        },
                    });
                }
                if kind == 0x2f {
                    break;
                }
            }
            0xf0 | 0xf7 => {
                running = None;
                let len = r.vlq().map_err(shift)? as usize;
                r.take(len).map_err(shift)?;
            }
            0x80..=0xef => {
                running = Some(status);
                let channel = status & 0x0f;
                let data_len = match status & 0xf0 {
                    0xc0 | 0xd0 => 1,
                    _ => 2,
                };
                let mut data = [0u8; 2];
                let mut filled = 0;
                if let Some(b) = first_data {
                    data[0] = b;
                    filled = 1;
                }
                while filled < data_len {
                    data[filled] = r.u8().map_err(shift)?;
                    filled += 1;
                }
                if data[..data_len].iter().any(|b| b & 0x80 != 0) {
                    return Err(shift(r.err("status byte inside channel message data")));
                }
                let kind = match status & 0xf0 {
                    0x80 => MessageKind::NoteOff { pitch: data[0] },
                    0x90 if data[1] == 0 => MessageKind::NoteOff { pitch: data[0] },
                    0x90 => MessageKind::NoteOn {
                        pitch: data[0],
                        velocity: data[1],
                    },
                    0xc0 => MessageKind::ProgramChange { program: data[0] },
                    _ => MessageKind::Other,
                };
                out.push(TrackEvent {
                    tick,
                    channel,
                    kind,
                });
            }
            other => {
                return Err(shift(r.err(format!("unsupported status byte {other:#04x}"))));
            }
        }
    }
    Ok(out)
}

/// Piecewise-constant tempo map converting ticks to seconds.
#[derive(Debug, Clone)]
pub struct TempoMap {
    division: Division,
    // (start tick, seconds at start tick, micros per quarter)
    segments: Vec<(u64, f64, u32)>,
}

impl TempoMap {
    pub fn new(division: Division, changes: &[(u64, u32)]) -> Self {
        let mut changes = changes.to_vec();
        changes.sort_by_key(|&(tick, _)| tick);
        let mut segments = vec![(0u64, 0.0f64, DEFAULT_TEMPO)];
        for (tick, tempo) in changes {
            let &(start, secs, current) = segments.last().expect("non-empty");
            let at = secs + Self::span(division, tick - start, current);
            if tick == start {
                segments.pop();
            }
            segments.push((tick, at, tempo));
        }
        TempoMap { division, segments }
    }

    fn span(division: Division, ticks: u64, tempo: u32) -> f64 {
        match division {
            Division::TicksPerQuarter(tpq) => {
                ticks as f64 * f64::from(tempo) / f64::from(tpq) / 1e6
            }
            Division::Smpte {
                fps,
                ticks_per_frame,
            } => {
                // 29 denotes 29.97 drop-frame
                let rate = if fps == 29 { 29.97 } else { f64::from(fps) };
                ticks as f64 / (rate * f64::from(ticks_per_frame))
            }
        }
    }

    pub fn seconds(&self, tick: u64) -> f64 {
        let idx = self.segments.partition_point(|&(start, _, _)| start <= tick) - 1;
        let (start, secs, tempo) = self.segments[idx];
        secs + Self::span(self.division, tick - start, tempo)
    }
}

impl MidiFile {
    pub fn tempo_map(&self) -> TempoMap {
        let changes: Vec<(u64, u32)> = self
            .tracks
            .iter()
            .flatten()
            .filter_map(|e| match e.kind {
                MessageKind::Tempo { micros_per_quarter } => Some((e.tick, micros_per_quarter)),
                _ => None,
            })
            .collect();
        TempoMap::new(self.division, &changes)
    }

    /// Pairs notes into quantized events. Overlapping notes with the same
    /// channel and pitch close first-in first-out.
    pub fn to_events(&self) -> (EventSequence, ParseReport) {
        let tempo = self.tempo_map();
        let mut merged: Vec<&TrackEvent> = self.tracks.iter().flatten().collect();
        merged.sort_by_key(|e| e.tick);

        let mut programs = [0u8; 16];
        let mut open: HashMap<(u8, u8), VecDeque<(f64, u8, usize)>> = HashMap::new();
        let mut notes: Vec<(usize, Event)> = Vec::new();
        let mut report = ParseReport::default();
        let mut order = 0usize;
        for e in merged {
            match e.kind {
                MessageKind::ProgramChange { program } => programs[usize::from(e.channel)] = program,
                MessageKind::NoteOn { pitch, .. } => {
                    let instrument = if e.channel == DRUM_CHANNEL {
                        DRUMS
                    } else {
                        programs[usize::from(e.channel)]
                    };
                    open.entry((e.channel, pitch)).or_default().push_back((
                        tempo.seconds(e.tick),
                        instrument,
                        order,
                    ));
                    order += 1;
                }
                MessageKind::NoteOff { pitch } => {
                    match open.get_mut(&(e.channel, pitch)).and_then(VecDeque::pop_front) {
                        Some((onset, instrument, idx)) => {
                            let duration = tempo.seconds(e.tick) - onset;
                            notes.push((idx, make_event(onset, duration, instrument, pitch)));
                        }
                        None => report.stray_note_offs += 1,
                    }
                }
                _ => {}
            }
        }
        for ((_, pitch), queue) in open {
            for (onset, instrument, idx) in queue {
                report.unpaired_note_ons += 1;
                let mut event = make_event(onset, 0.0, instrument, pitch);
                event.duration = QuantizedDuration::MAX;
                notes.push((idx, event));
            }
        }
        notes.sort_by_key(|&(idx, e)| (e.time, idx));
        let events = notes.into_iter().map(|(_, e)| e).collect();
        (
            EventSequence::new(events, OrderMode::Reject).expect("sorted above"),
            report,
        )
    }
}

fn make_event(onset: f64, duration: f64, instrument: u8, pitch: u8) -> Event {
    let time = seconds_to_ticks(onset.max(0.0)).unwrap_or(u32::MAX);
    let duration = (duration.max(0.0) * f64::from(TICKS_PER_SECOND)).round() as u32;
    let code = NoteCode::new(u32::from(instrument) * 128 + u32::from(pitch))
        .expect("instrument <= 128 and pitch < 128");
    Event::new(time, QuantizedDuration::clamped(duration), code)
}

/// Parses a format 0 or 1 file into a time-sorted event sequence.
pub fn parse_midi(bytes: &[u8]) -> Result<EventSequence> {
    Ok(parse_midi_with_report(bytes)?.0)
}

pub fn parse_midi_with_report(bytes: &[u8]) -> Result<(EventSequence, ParseReport)> {
    Ok(read_midi_file(bytes)?.to_events())
}

/// Channels available to pitched instruments.
pub const MELODIC_CHANNELS: [u8; 15] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 10, 11, 12, 13, 14, 15];

/// Assigns a channel to every instrument in `seq`: drums on channel 10, others
/// in order of first appearance.
pub fn assign_channels(seq: &EventSequence) -> Result<HashMap<u8, u8>> {
    let mut channels = HashMap::new();
    let mut next = 0;
    let mut melodic = 0;
    for e in seq.iter() {
        let Some(instrument) = e.note.instrument() else {
            continue;
        };
        if channels.contains_key(&instrument) {
            continue;
        }
        if instrument == DRUMS {
            channels.insert(instrument, DRUM_CHANNEL);
            continue;
        }
        melodic += 1;
        if let Some(&ch) = MELODIC_CHANNELS.get(next) {
            channels.insert(instrument, ch);
            next += 1;
        }
    }
    if melodic > MELODIC_CHANNELS.len() {
        return Err(Error::ChannelCapacity {
            needed: melodic,
            available: MELODIC_CHANNELS.len(),
        });
    }
    Ok(channels)
}

fn push_vlq(out: &mut Vec<u8>, mut value: u32) {
    let mut stack = [0u8; 5];
    let mut n = 0;
    loop {
        stack[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(stack[i] | if i > 0 { 0x80 } else { 0 });
    }
}

fn chunk(id: &[u8; 4], body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + 8);
    out.extend_from_slice(id);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body);
    out
}

/// 10 ms ticks to file ticks at 480 per quarter and 120 bpm (9.6 per tick).
fn file_tick(ticks: u32) -> u64 {
    (u64::from(ticks) * 48 + 2) / 5
}

/// Writes a format 1 file (tempo track plus one note track) at 500000
/// microseconds per quarter and 480 ticks per quarter. RESTs are dropped.
///
/// Parsing the output reproduces the input for sequences without overlapping
/// notes of the same instrument and pitch.
pub fn write_midi(seq: &EventSequence) -> Result<Vec<u8>> {
    let channels = assign_channels(seq)?;

    let mut tempo_track = Vec::new();
    push_vlq(&mut tempo_track, 0);
    tempo_track.extend_from_slice(&[0xff, 0x51, 0x03]);
    tempo_track.extend_from_slice(&DEFAULT_TEMPO.to_be_bytes()[1..]);
    push_vlq(&mut tempo_track, 0);
    tempo_track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    // (tick, rank, order, message); at one tick: closing offsets, onsets,
    // then offsets of zero-length notes
    let mut messages: Vec<(u64, u8, usize, [u8; 3])> = Vec::new();
    let mut programs: Vec<(u8, u8)> = channels
        .iter()
        .filter(|(&inst, _)| inst != DRUMS)
        .map(|(&inst, &ch)| (ch, inst))
        .collect();
    programs.sort_unstable();
    for (order, e) in seq.iter().enumerate() {
        let Note::Pitched(code) = e.note else {
            continue;
        };
        let ch = channels[&code.instrument()];
        let pitch = code.pitch();
        let on = file_tick(e.time);
        let off = file_tick(e.end());
        messages.push((on, 1, order, [0x90 | ch, pitch, 80]));
        let rank = if e.duration.get() == 0 { 2 } else { 0 };
        messages.push((off, rank, order, [0x80 | ch, pitch, 64]));
    }
    messages.sort_by_key(|&(tick, rank, order, _)| (tick, rank, order));

    let mut note_track = Vec::new();
    for (ch, program) in programs {
        push_vlq(&mut note_track, 0);
        note_track.extend_from_slice(&[0xc0 | ch, program]);
    }
    let mut last = 0u64;
    for (tick, _, _, msg) in messages {
        push_vlq(&mut note_track, (tick - last) as u32);
        note_track.extend_from_slice(&msg);
        last = tick;
    }
    push_vlq(&mut note_track, 0);
    note_track.extend_from_slice(&[0xff, 0x2f, 0x00]);

    let mut header = Vec::with_capacity(6);
    header.extend_from_slice(&1u16.to_be_bytes());
    header.extend_from_slice(&2u16.to_be_bytes());
    header.extend_from_slice(&WRITE_DIVISION.to_be_bytes());

    let mut out = chunk(b"MThd", &header);
    out.extend(chunk(b"MTrk", &tempo_track));
    out.extend(chunk(b"MTrk", &note_track));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smf(format: u16, division: u16, tracks: &[Vec<u8>]) -> Vec<u8> {
        let mut header = Vec::new();
        header.extend_from_slice(&format.to_be_bytes());
        header.extend_from_slice(&(tracks.len() as u16).to_be_bytes());
        header.extend_from_slice(&division.to_be_bytes());
        let mut out = chunk(b"MThd", &header);
        for t in tracks {
            out.extend(chunk(b"MTrk", t));
        }
        out
    }

    #[test]
    fn minimal_single_note() {
        // tempo 500000, note-on C4 at 0, note-off at 480 ticks
        let track = vec![
            0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20, //
            0x00, 0x90, 60, 100, //
            0x83, 0x60, 0x80, 60, 0, //
            0x00, 0xff, 0x2f, 0x00,
        ];
        let seq = parse_midi(&smf(0, 480, &[track])).unwrap();
        assert_eq!(seq.events(), &[Event::from_raw(0, 50, 60).unwrap()]);
    }

    #[test]
    fn zero_notes_is_empty() {
        let seq = parse_midi(&smf(1, 96, &[vec![0x00, 0xff, 0x2f, 0x00]])).unwrap();
        assert!(seq.is_empty());
    }

    #[test]
    fn running_status_velocity_zero_and_programs() {
        // channel 2 program 24, running status note-ons, velocity-0 note-off;
        // drums on channel 9
        let track = vec![
            0x00, 0xc2, 24, //
            0x00, 0x92, 64, 90, //
            0x00, 67, 90, // running status
            0x60, 64, 0, // 96 ticks later, velocity 0 closes 64
            0x00, 67, 0, //
            0x00, 0x99, 36, 100, //
            0x30, 0x89, 36, 0, //
            0x00, 0xff, 0x2f, 0x00,
        ];
        let seq = parse_midi(&smf(0, 96, &[track])).unwrap();
        let got: Vec<(u32, u32, u8, u8)> = seq
            .iter()
            .map(|e| {
                let c = e.note.code().unwrap();
                (e.time, e.duration.get(), c.instrument(), c.pitch())
            })
            .collect();
        assert_eq!(got, vec![(0, 50, 24, 64), (0, 50, 24, 67), (50, 25, 128, 36)]);
    }

    #[test]
    fn tempo_changes_are_piecewise() {
        // 96 tpq; first quarter at 500000, then 250000 us per quarter
        let track = vec![
            0x00, 0xff, 0x51, 0x03, 0x07, 0xa1, 0x20, //
            0x60, 0xff, 0x51, 0x03, 0x03, 0xd0, 0x90, //
            0x00, 0x90, 60, 1, //
            0x60, 0x80, 60, 0, //
        ];
        let seq = parse_midi(&smf(0, 96, &[track])).unwrap();
        assert_eq!(seq.events(), &[Event::from_raw(50, 25, 60).unwrap()]);
    }

    #[test]
    fn overlapping_same_pitch_closes_fifo() {
        let track = vec![
            0x00, 0x90, 60, 1, //
            0x60, 0x90, 60, 1, // second on at 96
            0x60, 0x80, 60, 0, // first off at 192 closes the first note
            0x60, 0x80, 60, 0, //
        ];
        let seq = parse_midi(&smf(0, 96, &[track])).unwrap();
        let durs: Vec<u32> = seq.iter().map(|e| e.duration.get()).collect();
        assert_eq!(durs, vec![100, 100]);
    }

    #[test]
    fn unpaired_note_on_is_clamped() {
        let track = vec![0x00, 0x90, 60, 1, 0x00, 0x80, 61, 0];
        let (seq, report) = parse_midi_with_report(&smf(0, 96, &[track])).unwrap();
        assert_eq!(report.unpaired_note_ons, 1);
        assert_eq!(report.stray_note_offs, 1);
        assert_eq!(seq.events()[0].duration.get(), 999);
    }

    #[test]
    fn malformed_inputs_report_offsets() {
        assert!(matches!(parse_midi(b"RIFF"), Err(Error::MidiParse { offset: 0, .. })));
        assert!(parse_midi(b"MThd").is_err());
        let mut bytes = smf(0, 96, &[vec![0x00, 0x90, 60]]);
        assert!(matches!(parse_midi(&bytes), Err(Error::MidiParse { .. })));
        // data byte with no running status: error points inside the track
        bytes = smf(0, 96, &[vec![0x00, 0x40, 0x40]]);
        match parse_midi(&bytes) {
            Err(Error::MidiParse { offset, .. }) => assert_eq!(offset, 14 + 8 + 1),
            other => panic!("unexpected {other:?}"),
        }
        // truncated chunk
        let mut short = smf(0, 96, &[vec![0x00, 0xff, 0x2f, 0x00]]);
        short.truncate(short.len() - 2);
        assert!(parse_midi(&short).is_err());
        assert!(parse_midi(&smf(2, 96, &[])).is_err());
    }

    #[test]
    fn write_then_parse_round_trips() {
        let seq = EventSequence::new(
            vec![
                Event::from_raw(0, 48, 60).unwrap(),
                Event::from_raw(0, 0, 128 * 24 + 40).unwrap(),
                Event::from_raw(48, 3, 128 * 128 + 36).unwrap(),
                Event::from_raw(48, 999, 60).unwrap(),
                Event::from_raw(7_777, 1, 16_511).unwrap(),
            ],
            OrderMode::Reject,
        )
        .unwrap();
        let bytes = write_midi(&seq).unwrap();
        assert_eq!(parse_midi(&bytes).unwrap(), seq);
    }

    #[test]
    fn rests_are_dropped_on_write() {
        let seq = EventSequence::new(
            vec![Event::from_raw(0, 10, 60).unwrap(), Event::rest(100)],
            OrderMode::Reject,
        )
        .unwrap();
        assert_eq!(parse_midi(&write_midi(&seq).unwrap()).unwrap(), seq.without_rests());
    }

    #[test]
    fn empty_sequence_writes_a_valid_file() {
        let bytes = write_midi(&EventSequence::empty()).unwrap();
        let file = read_midi_file(&bytes).unwrap();
        assert_eq!(file.format, 1);
        assert_eq!(file.tracks.len(), 2);
        assert!(parse_midi(&bytes).unwrap().is_empty());
    }

    #[test]
    fn channel_allocation() {
        let seq = EventSequence::new(
            vec![
                Event::from_raw(0, 1, 60).unwrap(),
                Event::from_raw(1, 1, 128 * 128 + 36).unwrap(),
                Event::from_raw(2, 1, 128 * 24 + 60).unwrap(),
            ],
            OrderMode::Reject,
        )
        .unwrap();
        let ch = assign_channels(&seq).unwrap();
        assert_eq!(ch[&128], 9);
        assert_eq!(ch[&0], 0);
        assert_eq!(ch[&24], 1);
        let bytes = write_midi(&seq).unwrap();
        let file = read_midi_file(&bytes).unwrap();
        let programs: Vec<(u8, u8)> = file.tracks[1]
            .iter()
            .filter_map(|e| match e.kind {
                MessageKind::ProgramChange { program } => Some((e.channel, program)),
                _ => None,
            })
            .collect();
        assert_eq!(programs, vec![(0, 0), (1, 24)]);
    }

    #[test]
    fn too_many_instruments() {
        let events: Vec<Event> = (0..16)
            .map(|k| Event::from_raw(k, 1, k * 128 + 60).unwrap())
            .collect();
        let seq = EventSequence::new(events, OrderMode::Reject).unwrap();
        assert!(matches!(
            write_midi(&seq),
            Err(Error::ChannelCapacity { needed: 16, available: 15 })
        ));
    }

    #[test]
    fn smpte_division() {
        // 25 fps, 40 ticks per frame: 1000 ticks per second
        let division = (0xe7u16 << 8) | 40;
        let track = vec![0x00, 0x90, 60, 1, 0x87, 0x68, 0x80, 60, 0];
        let seq = parse_midi(&smf(0, division, &[track])).unwrap();
        assert_eq!(seq.events(), &[Event::from_raw(0, 100, 60).unwrap()]);
    }
}
