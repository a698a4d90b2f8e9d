//! Writes a directory of generated MIDI songs for desk-scale runs.
//!
//!     cargo run --example synthetic_corpus -- /tmp/songs 64 7

use std::path::PathBuf;

use anticipation::synthetic::write_synthetic_corpus;

fn main() -> anticipation::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "songs".into()));
    let count = args.next().and_then(|s| s.parse().ok()).unwrap_or(64);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);
    let files = write_synthetic_corpus(&dir, count, seed)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    Ok(())
}
