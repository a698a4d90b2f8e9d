//! Preprocesses a directory of MIDI files into train/valid/test splits.
//!
//!     cargo run --example synthetic_corpus -- /tmp/songs 64
//!     cargo run --example ingest_corpus -- /tmp/songs

use std::path::PathBuf;

use anticipation::corpus::{preprocess_corpus, CorpusFilters, Split};

fn main() -> anticipation::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "songs".into()));
    let corpus = preprocess_corpus(&dir, &CorpusFilters::default())?;
    println!("{} files, {} accepted", corpus.manifest.entries.len(), corpus.sequences.len());
    for split in [Split::Train, Split::Valid, Split::Test] {
        let seqs = corpus.split(split);
        let seconds = seqs.iter().fold(0.0, |acc, s| acc + s.seconds());
        println!("{split:?}: {} sequences, {:.1} min", seqs.len(), seconds / 60.0);
    }
    print!("{}", corpus.manifest.to_tsv());
    Ok(())
}
