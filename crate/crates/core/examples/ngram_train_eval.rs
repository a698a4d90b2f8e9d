//! Trains the count-based reference model on augmented songs and scores
//! held-out songs against a uniform predictor.

use anticipation::augment::{augment_corpus, AugmentationPolicy};
use anticipation::metrics::evaluate_events;
use anticipation::predictor::{train_ngram, UniformPredictor};
use anticipation::synthetic::{synthetic_song, SongShape};
use anticipation::tokenize::arrival;
use anticipation::EventSequence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anticipation::Result<()> {
    let order = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let songs: Vec<EventSequence> = (0..40).map(|_| synthetic_song(&SongShape::default(), &mut rng)).collect();
    let (train, held_out) = songs.split_at(34);

    let augmented = augment_corpus(train, &AugmentationPolicy::default(), 5)?;
    let examples = augmented.packed.examples.iter().map(|e| e.tokens());
    let mut model = train_ngram(examples, order, 0.01, arrival::VOCAB_SIZE)?;
    println!("order {order}, contexts per order {:?}", model.context_counts());

    let mut uniform = UniformPredictor { vocab_size: arrival::VOCAB_SIZE };
    for (name, eval) in [
        ("n-gram", evaluate_events(&mut model, held_out, 1024)?),
        ("uniform", evaluate_events(&mut uniform, held_out, 1024)?),
    ] {
        let r = eval.report()?;
        println!(
            "{name:>8}: {:.3} nats/token, {:.1} bits/s, event perplexity {:.1}",
            r.nats_per_token,
            r.bits_per_second,
            r.ppl_event.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
