//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use anticipation::anticipation::{densify, interleave, split_and_sort};
use anticipation::augment::{
    augment_corpus, sample_instrument_parts, sample_random_controls, AugmentationPolicy, Pattern,
};
use anticipation::corpus::{preprocess_corpus, CorpusFilters, Split};
use anticipation::event::{EventSequence, OrderMode};
use anticipation::golden::{codec_checks, interleave_checks, metric_checks, GoldenCheck};
use anticipation::metrics::{bits_per_second, evaluate_events, event_perplexity, CorpusStats};
use anticipation::midi::{parse_midi, write_midi};
use anticipation::predictor::{train_ngram, ReplayPredictor};
use anticipation::sampler::{generate_anticipatory, strip_controls, SamplerConfig};
use anticipation::synthetic::{write_synthetic_corpus, MELODY_INSTRUMENT};
use anticipation::tokenize::{
    arrival, classify_arrival, decode_arrival, decode_interarrival, encode_arrival,
    encode_interarrival, item_tokens, ControlCode, TokenClass,
};
use anticipation::{Codec, ControlSequence, InterleavedSequence, Item, Tag};
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn golden(checks: Vec<GoldenCheck>, names: &[&str]) -> Outcome {
    let picked: Vec<&GoldenCheck> = checks.iter().filter(|c| names.contains(&c.name)).collect();
    if picked.len() != names.len() {
        return Err(format!("expected {} checks, found {}", names.len(), picked.len()));
    }
    match picked.iter().find(|c| !c.passed) {
        Some(c) => Err(format!("{}: {}", c.name, c.detail)),
        None => Ok(format!("{} checks exact", picked.len())),
    }
}

fn within(limit: Duration, start: Instant, outcome: Outcome) -> Outcome {
    let took = start.elapsed();
    let detail = outcome?;
    if took > limit {
        return Err(format!("{detail}, but took {took:.2?} (limit {limit:?})"));
    }
    Ok(format!("{detail} in {took:.2?}"))
}

fn c1_golden_tokenization() -> Outcome {
    let start = Instant::now();
    let out = golden(codec_checks(), &["twinkle-arrival-encode", "twinkle-arrival-decode"]);
    within(Duration::from_secs(1), start, out)
}

fn c2_golden_interarrival() -> Outcome {
    golden(
        codec_checks(),
        &[
            "twinkle-interarrival-encode",
            "twinkle-interarrival-legato-encode",
            "twinkle-interarrival-decode",
            "twinkle-interarrival-legato-decode",
        ],
    )
}

fn c3_golden_interleaving() -> Outcome {
    golden(
        interleave_checks(),
        &[
            "interleave-stopping-time",
            "interleave-sort-order-differs",
            "interleave-sparse-late-control",
            "interleave-densified",
        ],
    )
}

fn c4_stopping_time_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let deltas = [0.5, 1.0, 2.0, 5.0];
    let instances: Vec<_> = (0..1000)
        .map(|i| {
            let n = rng.random_range(0..=200);
            let k = rng.random_range(0..=50);
            let events = common::random_events(&mut rng, n, 10_000);
            let controls = common::random_controls(&mut rng, k, 10_000);
            (i, deltas[i % deltas.len()], events, controls)
        })
        .collect();
    let count = instances.len();
    instances.into_par_iter().try_for_each(|(i, delta, events, controls)| {
        let config = SamplerConfig {
            delta,
            seed: i as u64,
            ..SamplerConfig::default()
        };
        let tokens = encode_arrival(&InterleavedSequence::from_events(&events))
            .map_err(|e| e.to_string())?
            .into_tokens();
        let mut replay = ReplayPredictor::new(tokens, arrival::SEP, arrival::VOCAB_SIZE);
        let code = if controls.is_empty() { ControlCode::Ar } else { ControlCode::Aar };
        let online = generate_anticipatory(&mut replay, &controls, code, &config)
            .map_err(|e| format!("instance {i}: {e}"))?;
        let offline = interleave(&events, &controls, config.delta_ticks());
        if online.sequence != offline || online.truncated {
            return Err(format!(
                "instance {i} (n={}, k={}, delta={delta}): online {} vs offline {}",
                events.len(),
                controls.len(),
                common::shape(&online.sequence),
                common::shape(&offline)
            ));
        }
        Ok(())
    })?;
    within(
        Duration::from_secs(30),
        start,
        Ok(format!("{count} instances identical")),
    )
}

fn c5_round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let codec_cases = 10_000;
    for i in 0..codec_cases {
        let n = rng.random_range(0..60);
        let items = common::random_items(&mut rng, n);
        let tokens = encode_arrival(&items).map_err(|e| e.to_string())?;
        let back = decode_arrival(tokens.tokens()).map_err(|e| e.to_string())?;
        let want: Vec<InterleavedSequence> = if items.is_empty() { vec![] } else { vec![items.clone()] };
        if back != want {
            return Err(format!("arrival case {i} differs"));
        }
        let plain = common::interarrival_safe(&mut rng, n);
        let tokens = encode_interarrival(&plain).map_err(|e| e.to_string())?;
        let back = decode_interarrival(tokens.tokens()).map_err(|e| e.to_string())?;
        let want: Vec<EventSequence> = if plain.is_empty() { vec![] } else { vec![plain.clone()] };
        if back != want {
            return Err(format!("interarrival case {i} differs"));
        }
    }
    let pair_cases = 1000;
    for i in 0..pair_cases {
        let n = rng.random_range(0..200);
        let k = rng.random_range(0..50);
        let events = common::random_events(&mut rng, n, 20_000);
        let controls = common::random_controls(&mut rng, k, 20_000);
        let merged = split_and_sort(&interleave(&events, &controls, rng.random_range(1..1000)));
        let mut all = events.into_events();
        all.extend_from_slice(controls.controls());
        let want = EventSequence::new(all, OrderMode::Sort).unwrap().canonicalized();
        if merged != want {
            return Err(format!("split_and_sort case {i} differs"));
        }
    }
    Ok(format!(
        "{codec_cases} arrival + {codec_cases} interarrival codec cases, {pair_cases} interleave pairs"
    ))
}

fn c6_metric_reproduction() -> Outcome {
    let stats = CorpusStats::from_hours(Codec::Arrival, 125_050_497, 560.98);
    let bps = bits_per_second(14.9f64.ln() / 3.0, &stats).map_err(|e| e.to_string())?;
    let ppl = event_perplexity(1.59f64.ln(), 3.90f64.ln(), 2.40f64.ln());
    golden(metric_checks(), &["bits-per-second", "event-perplexity-product"])?;
    if (bps - 80.4).abs() > 0.1 || (ppl - 14.9).abs() > 0.1 {
        return Err(format!("bps {bps:.3}, ppl {ppl:.3}"));
    }
    Ok(format!("{bps:.2} bits/s, perplexity {ppl:.2}"))
}

fn c7_density_guarantee() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (target, delta) = (100u32, 500u32);
    let mut checked = 0usize;
    for i in 0..1000 {
        // sparse: gaps up to 20 s
        let n = rng.random_range(1..40);
        let mut t = 0;
        let mut events = Vec::new();
        for _ in 0..n {
            t += rng.random_range(0..2000);
            events.push(common::note(t, rng.random_range(0..1000), rng.random_range(0..16_512)));
        }
        let events = EventSequence::new(events, OrderMode::Reject).unwrap();
        let last = events.events().last().unwrap().time;
        let k = rng.random_range(0..30);
        let controls = common::random_controls(&mut rng, k, last + 1500);
        let dense = densify(&events, target);
        let first = dense.events()[0].time;
        let seq = interleave(&dense, &controls, delta);
        let mut prev_plain: Option<u32> = None;
        for item in seq.items() {
            if item.tag == Tag::Event {
                prev_plain = Some(item.event.time);
                continue;
            }
            let s = item.event.time;
            if s > last + delta {
                continue; // no event can reach it
            }
            let Some(p) = prev_plain else {
                return Err(format!("case {i}: control at {s} precedes every event"));
            };
            if p + delta < s {
                return Err(format!("case {i}: control at {s} follows event at {p}"));
            }
            if s >= first + delta && p + delta >= s + target {
                return Err(format!("case {i}: control at {s} surfaced late, after event at {p}"));
            }
            checked += 1;
        }
    }
    Ok(format!("1000 sequences, {checked} controls within [s - delta, s - delta + target)"))
}

fn chi_square_p(counts: &[u64], expected: &[f64]) -> f64 {
    let stat: f64 = counts
        .iter()
        .zip(expected)
        .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

fn c8_augmentation_composition() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dataset: Vec<EventSequence> = (0..6).map(|_| common::midi_safe(&mut rng, 150)).collect();
    let policy = AugmentationPolicy::default();
    let out = augment_corpus(&dataset, &policy, 8).map_err(|e| e.to_string())?;
    for source in 0..dataset.len() {
        let mut counts = [0usize; 4];
        for c in out.copies.iter().filter(|c| c.source == source) {
            counts[Pattern::ALL.iter().position(|&p| p == c.pattern).unwrap()] += 1;
        }
        if counts != [3, 3, 12, 12] {
            return Err(format!("sequence {source}: pattern counts {counts:?}"));
        }
    }

    let draws = 10_000;
    let probe = common::random_events(&mut rng, 3, 100);
    let mut rate_counts = vec![0u64; policy.random_rates.len()];
    for _ in 0..draws {
        let (rate, _) = sample_random_controls(&probe, &policy.random_rates, &mut rng);
        rate_counts[policy.random_rates.iter().position(|&r| r == rate).unwrap()] += 1;
    }
    let p_rate = chi_square_p(&rate_counts, &vec![draws as f64 / 9.0; 9]);

    let parts = [0u8, 5, 24, 40, 128];
    let mut size_counts = vec![0u64; parts.len() - 1];
    let mut part_counts = vec![0u64; parts.len()];
    for _ in 0..draws {
        let chosen = sample_instrument_parts(&parts, &mut rng).unwrap();
        size_counts[chosen.len() - 1] += 1;
        for k in chosen {
            part_counts[parts.iter().position(|&p| p == k).unwrap()] += 1;
        }
    }
    let p_size = chi_square_p(&size_counts, &vec![draws as f64 / 4.0; 4]);
    let total_parts: u64 = part_counts.iter().sum();
    let p_part = chi_square_p(&part_counts, &vec![total_parts as f64 / 5.0; 5]);
    let worst = p_rate.min(p_size).min(p_part);
    let detail = format!("3:3:12:12 per sequence; chi-square p (rate {p_rate:.3}, count {p_size:.3}, part {p_part:.3})");
    if worst <= 0.01 {
        return Err(detail);
    }
    within(Duration::from_secs(120), start, Ok(detail))
}

fn c9_end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let songs = dir.path().join("songs");
    write_synthetic_corpus(&songs, 64, 9).map_err(|e| e.to_string())?;
    let corpus = preprocess_corpus(&songs, &CorpusFilters::default()).map_err(|e| e.to_string())?;
    let train: Vec<EventSequence> = corpus.split(Split::Train).into_iter().cloned().collect();
    let held_out: Vec<EventSequence> = [Split::Valid, Split::Test]
        .into_iter()
        .flat_map(|s| corpus.split(s))
        .cloned()
        .collect();
    if corpus.sequences.len() < 50 || held_out.is_empty() {
        return Err(format!("{} accepted, {} held out", corpus.sequences.len(), held_out.len()));
    }

    let augmented = augment_corpus(&train, &AugmentationPolicy::default(), 9).map_err(|e| e.to_string())?;
    let examples: Vec<&[u32]> = augmented.packed.examples.iter().map(|e| e.tokens()).collect();
    let mut model = train_ngram(examples, 3, 0.01, arrival::VOCAB_SIZE).map_err(|e| e.to_string())?;
    let eval = evaluate_events(&mut model, &held_out, 1024).map_err(|e| e.to_string())?;
    let report = eval.report().map_err(|e| e.to_string())?;
    let uniform = (arrival::VOCAB_SIZE as f64).ln() / std::f64::consts::LN_2 * report.tokens as f64 / report.seconds;
    if !report.bits_per_second.is_finite() || report.bits_per_second >= uniform {
        return Err(format!("{:.2} bits/s vs uniform {uniform:.2}", report.bits_per_second));
    }

    // condition on the first 15 s of a held-out melody
    let melody: Vec<_> = held_out[0]
        .iter()
        .filter(|e| e.note.instrument() == Some(MELODY_INSTRUMENT) && e.time < 1500)
        .copied()
        .collect();
    let controls = ControlSequence::new(melody, OrderMode::Reject).map_err(|e| e.to_string())?;
    let (mut sampled, mut truncated) = (0, 0);
    let seeds = 8;
    for seed in 0..seeds {
        let config = SamplerConfig {
            seed,
            max_tokens: 1500,
            ..SamplerConfig::default()
        };
        let generation = generate_anticipatory(&mut model, &controls, ControlCode::Aar, &config)
            .map_err(|e| e.to_string())?;
        let events = check_generation(&generation.sequence, &controls).map_err(|e| format!("seed {seed}: {e}"))?;
        sampled += events;
        truncated += usize::from(generation.truncated);
    }
    within(
        Duration::from_secs(300),
        start,
        Ok(format!(
            "{} songs, {:.1} bits/s vs uniform {uniform:.1}; {seeds} samples, {sampled} events around {} controls, {truncated} hit the budget",
            corpus.sequences.len(),
            report.bits_per_second,
            controls.len(),
        )),
    )
}

/// Post-conditions of one anticipatory sample; returns its event count.
fn check_generation(seq: &InterleavedSequence, controls: &ControlSequence) -> Result<usize, String> {
    let plain: Vec<_> = seq.items().iter().filter(|i| i.tag == Tag::Event).map(|i| i.event).collect();
    if !plain.windows(2).all(|w| w[0].time <= w[1].time) {
        return Err("generated times decrease".into());
    }
    for e in &plain {
        let item = Item { event: anticipation::Event { time: e.time % 10_000, ..*e }, tag: Tag::Event };
        let [t, d, n] = item_tokens(&item).map_err(|e| e.to_string())?;
        let classes = [t, d, n].map(classify_arrival);
        if classes[0] != Some(TokenClass::Time)
            || classes[1] != Some(TokenClass::Duration)
            || !matches!(classes[2], Some(TokenClass::Note | TokenClass::Rest))
            || (classes[2] == Some(TokenClass::Rest) && e.duration != anticipation::event::QuantizedDuration::ZERO)
        {
            return Err(format!("generated triple {t} {d} {n} breaks the slot grammar"));
        }
    }
    if seq.controls() != controls.controls() {
        return Err("controls were not all emitted in order".into());
    }
    if strip_controls(seq).events() != plain.as_slice() {
        return Err("strip_controls lost or reordered events".into());
    }
    let mut merged = plain.clone();
    merged.extend_from_slice(controls.controls());
    let want = EventSequence::new(merged, OrderMode::Sort).unwrap().canonicalized();
    if split_and_sort(seq) != want {
        return Err("split_and_sort is not the union of events and controls".into());
    }
    Ok(plain.len())
}

fn c10_midi_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cases = 1000;
    for i in 0..cases {
        let n = rng.random_range(0..120);
        let seq = common::midi_safe(&mut rng, n);
        let bytes = write_midi(&seq).map_err(|e| format!("case {i}: {e}"))?;
        let back = parse_midi(&bytes).map_err(|e| format!("case {i}: {e}"))?;
        if back != seq {
            return Err(format!("case {i} differs"));
        }
    }
    Ok(format!("{cases} sequences identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("golden arrival tokenization", c1_golden_tokenization),
        ("golden interarrival tokenization", c2_golden_interarrival),
        ("golden interleaving", c3_golden_interleaving),
        ("stopping-time equivalence", c4_stopping_time_equivalence),
        ("codec and split/sort round trips", c5_round_trips),
        ("metric reproduction", c6_metric_reproduction),
        ("density guarantee", c7_density_guarantee),
        ("augmentation composition", c8_augmentation_composition),
        ("end-to-end desk-scale run", c9_end_to_end),
        ("MIDI round trip", c10_midi_round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
