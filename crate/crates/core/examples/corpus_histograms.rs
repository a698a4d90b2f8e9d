//! Length and token-rate histograms of a generated corpus.

use anticipation::stats::{corpus_histograms, HistogramConfig};
use anticipation::synthetic::{synthetic_song, SongShape};
use anticipation::{Codec, EventSequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anticipation::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let songs: Vec<EventSequence> = (0..50).map(|_| synthetic_song(&SongShape::default(), &mut rng)).collect();
    for codec in [Codec::Arrival, Codec::Interarrival] {
        let (lengths, rates) = corpus_histograms(&songs, codec, HistogramConfig::default())?;
        println!("== {} tokens per sequence\n{}", codec.name(), lengths.to_tsv());
        println!("== {} tokens per second\n{}", codec.name(), rates.to_tsv());
    }
    Ok(())
}
