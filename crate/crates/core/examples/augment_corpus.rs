//! Builds augmented training copies of a few generated songs and reports the
//! pattern mix and token overhead.

use anticipation::augment::{augment_corpus, AugmentationPolicy, Pattern};
use anticipation::synthetic::{synthetic_song, SongShape};
use anticipation::EventSequence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anticipation::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let songs: Vec<EventSequence> = (0..8).map(|_| synthetic_song(&SongShape::default(), &mut rng)).collect();
    let policy = AugmentationPolicy::default();
    let out = augment_corpus(&songs, &policy, 42)?;

    println!("copies per song by pattern: {:?}", policy.composition());
    for pattern in Pattern::ALL {
        let copies = out.copies.iter().filter(|c| c.pattern == pattern).count();
        let fallbacks = out.copies.iter().filter(|c| c.pattern == pattern && c.fallback).count();
        let controls: usize = out.copies.iter().filter(|c| c.pattern == pattern).map(|c| c.sequence.control_count()).sum();
        println!("{:>10}: {copies} copies, {controls} controls, {fallbacks} fell back", pattern.name());
    }
    let s = &out.stats;
    println!(
        "tokens: {} source, {} augmented ({:.1}x), {} REST",
        s.base_tokens,
        s.augmented_tokens,
        s.augmented_tokens as f64 / s.base_tokens as f64,
        s.rest_tokens
    );
    println!("{} packed examples, {} windows discarded", out.packed.examples.len(), out.packed.discarded);
    Ok(())
}
