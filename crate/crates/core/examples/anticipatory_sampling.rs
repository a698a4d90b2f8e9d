//! Accompanies a melody: the melody is given as controls and the model
//! fills in the remaining parts around it.

use anticipation::augment::{augment_corpus, AugmentationPolicy};
use anticipation::event::OrderMode;
use anticipation::predictor::train_ngram;
use anticipation::sampler::{generate_anticipatory, strip_controls, SamplerConfig};
use anticipation::synthetic::{synthetic_song, SongShape, MELODY_INSTRUMENT};
use anticipation::tokenize::{arrival, ControlCode};
use anticipation::{ControlSequence, EventSequence};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anticipation::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let songs: Vec<EventSequence> = (0..30).map(|_| synthetic_song(&SongShape::default(), &mut rng)).collect();
    let augmented = augment_corpus(&songs[1..], &AugmentationPolicy::default(), 11)?;
    let mut model = train_ngram(augmented.packed.examples.iter().map(|e| e.tokens()), 4, 0.01, arrival::VOCAB_SIZE)?;

    let melody: Vec<_> = songs[0]
        .iter()
        .filter(|e| e.note.instrument() == Some(MELODY_INSTRUMENT))
        .copied()
        .collect();
    let controls = ControlSequence::new(melody, OrderMode::Reject)?;
    let config = SamplerConfig { seed, max_tokens: 600, ..SamplerConfig::default() };
    let out = generate_anticipatory(&mut model, &controls, ControlCode::Aar, &config)?;

    for item in out.sequence.items() {
        println!("{}{}", if item.is_control() { "C " } else { "  " }, item.event);
    }
    println!(
        "{} sampled tokens, {} accompaniment events, {} melody controls{}",
        out.sampled_tokens,
        strip_controls(&out.sequence).len(),
        controls.len(),
        if out.truncated { ", budget reached" } else { "" }
    );
    Ok(())
}
