//! Small generated songs for desk-scale runs: a scale-walking melody, a bass
//! line on chord roots, and a drum pattern.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::event::{encode_note, Event, EventSequence, OrderMode, QuantizedDuration, DRUMS};
use crate::midi::write_midi;

pub const MELODY_INSTRUMENT: u8 = 0;
pub const BASS_INSTRUMENT: u8 = 33;

const MAJOR: [i32; 7] = [0, 2, 4, 5, 7, 9, 11];
const PROGRESSION: [i32; 4] = [0, 5, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SongShape {
    /// Beat length choices in ticks.
    pub beats: &'static [u32],
    pub min_bars: u32,
    pub max_bars: u32,
}

impl Default for SongShape {
    fn default() -> Self {
        SongShape {
            beats: &[40, 50, 60],
            min_bars: 8,
            max_bars: 16,
        }
    }
}

fn note(t: u32, d: u32, instrument: u8, pitch: i32) -> Event {
    let code = encode_note(u32::from(instrument), pitch.clamp(0, 127) as u32)
        .expect("instrument and pitch are in range");
    Event::new(t, QuantizedDuration::clamped(d), code)
}

/// One song.
pub fn synthetic_song<R: Rng + ?Sized>(shape: &SongShape, rng: &mut R) -> EventSequence {
    let beat = shape.beats[rng.random_range(0..shape.beats.len())];
    let bars = rng.random_range(shape.min_bars..=shape.max_bars);
    let root = rng.random_range(55..67);
    let eighth = beat / 2;
    let mut degree: i32 = 0;
    let mut events = Vec::new();
    for bar in 0..bars {
        let chord = PROGRESSION[bar as usize % PROGRESSION.len()];
        for b in 0..4 {
            let t = (bar * 4 + b) * beat;
            let fifth = if b % 2 == 1 { 7 } else { 0 };
            events.push(note(t, beat - 2, BASS_INSTRUMENT, root - 24 + MAJOR[chord as usize] + fifth));
            events.push(note(t, 5, DRUMS, if b % 2 == 0 { 36 } else { 38 }));
            for half in 0..2 {
                let te = t + half * eighth;
                events.push(note(te, 5, DRUMS, 42));
                if rng.random_bool(0.85) {
                    degree = (degree + rng.random_range(-2..=2)).clamp(-3, 10);
                    let octave = degree.div_euclid(7) * 12;
                    let pitch = root + octave + MAJOR[degree.rem_euclid(7) as usize];
                    events.push(note(te, eighth - 2, MELODY_INSTRUMENT, pitch));
                }
            }
        }
    }
    EventSequence::new(events, OrderMode::Sort).expect("sorting cannot fail")
}

/// Writes `count` songs as `song-NNN.mid` under `dir`.
pub fn write_synthetic_corpus(dir: &Path, count: usize, seed: u64) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::at_path(dir, e))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = SongShape::default();
    (0..count)
        .map(|i| {
            let song = synthetic_song(&shape, &mut rng);
            let path = dir.join(format!("song-{i:03}.mid"));
            fs::write(&path, write_midi(&song)?).map_err(|e| Error::at_path(&path, e))?;
            Ok(path)
        })
        .collect()
}
