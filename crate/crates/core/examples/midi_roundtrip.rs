//! Reads a MIDI file (or generates a song), writes it back and checks the
//! event sequence survives.
//!
//!     cargo run --example midi_roundtrip -- song.mid

use anticipation::midi::{parse_midi, write_midi};
use anticipation::synthetic::{synthetic_song, SongShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seq = match std::env::args().nth(1) {
        Some(path) => {
            let bytes = std::fs::read(&path)?;
            parse_midi(&bytes)?
        }
        None => synthetic_song(&SongShape::default(), &mut ChaCha8Rng::seed_from_u64(1)),
    };
    let bytes = write_midi(&seq)?;
    let back = parse_midi(&bytes)?;
    println!(
        "{} events, {:.1} s, {} bytes of MIDI, identical after round trip: {}",
        seq.len(),
        seq.seconds(),
        bytes.len(),
        back == seq
    );
    Ok(())
}
