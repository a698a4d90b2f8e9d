//! Contrasts anticipatory sampling with the autoregressive baseline, which
//! sees each control only once time has caught up with it. A replay
//! predictor makes both runs draw the same events.

use anticipation::event::{Event, OrderMode};
use anticipation::predictor::ReplayPredictor;
use anticipation::sampler::{generate_anticipatory, generate_autoregressive_infill, SamplerConfig};
use anticipation::tokenize::{arrival, ControlCode};
use anticipation::{encode_arrival, ControlSequence, EventSequence, InterleavedSequence};

fn main() -> anticipation::Result<()> {
    let note = |t| Event::from_raw(t, 50, 60);
    let events = EventSequence::new((0..8).map(|i| note(i * 100)).collect::<Result<_, _>>()?, OrderMode::Reject)?;
    let controls = ControlSequence::new(vec![Event::from_raw(450, 50, 67)?, Event::from_raw(650, 50, 64)?], OrderMode::Reject)?;
    let tokens = encode_arrival(&InterleavedSequence::from_events(&events))?.into_tokens();
    let config = SamplerConfig { delta: 2.0, ..SamplerConfig::default() };

    let mut replay = ReplayPredictor::new(tokens.clone(), arrival::SEP, arrival::VOCAB_SIZE);
    let anticipated = generate_anticipatory(&mut replay, &controls, ControlCode::Aar, &config)?;
    let mut replay = ReplayPredictor::new(tokens, arrival::SEP, arrival::VOCAB_SIZE);
    let baseline = generate_autoregressive_infill(&mut replay, &controls, &config)?;

    for (name, out) in [("anticipatory", &anticipated), ("baseline", &baseline)] {
        let shape: String = out.sequence.items().iter().map(|i| if i.is_control() { 'u' } else { 'e' }).collect();
        println!("{name:>12}: {shape}");
    }
    Ok(())
}
