mod common;

use std::collections::HashMap;

use anticipation::anticipation::{densify, interleave, split_and_sort};
use anticipation::augment::{augment_corpus, AugmentationPolicy};
use anticipation::event::{EventSequence, OrderMode};
use anticipation::predictor::{
    format_request, format_response, parse_request, parse_response, train_ngram,
    validate_distribution, NGramModel, Predictor, ReplayPredictor, NGRAM_WEIGHT,
};
use anticipation::sampler::{
    generate_anticipatory, generate_autoregressive_infill, nucleus_support, SamplerConfig,
};
use anticipation::text::{parse_event_text, write_event_text};
use anticipation::tokenize::{
    arrival, decode_arrival, encode_arrival, read_token_file, write_token_file, ControlCode,
};
use anticipation::{Codec, ControlSequence, InterleavedSequence, Item, Tag, Token};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Expected interleaving built position by position: a control lands right
/// after the first event whose time reaches `s - delta`.
fn interleave_oracle(events: &EventSequence, controls: &ControlSequence, delta: u32) -> Vec<Item> {
    let es = events.events();
    let mut after: Vec<Vec<Item>> = vec![Vec::new(); es.len() + 1];
    for &u in controls.controls() {
        let slot = es.iter().position(|e| e.time + delta >= u.time).map_or(es.len(), |i| i + 1);
        after[slot].push(Item::control(u));
    }
    let mut out = std::mem::take(&mut after[0]);
    for (i, e) in es.iter().enumerate() {
        out.push(Item::event(*e));
        out.append(&mut after[i + 1]);
    }
    out
}

/// Backoff probability recomputed from raw k-gram counts.
fn ngram_oracle(corpus: &[Vec<Token>], order: usize, alpha: f64, vocab: usize, context: &[Token], w: Token) -> f64 {
    let mut counts: HashMap<Vec<Token>, u64> = HashMap::new();
    for seq in corpus {
        for i in 0..seq.len() {
            for k in 0..order.min(i + 1) {
                *counts.entry(seq[i - k..=i].to_vec()).or_default() += 1;
            }
        }
    }
    let total: u64 = corpus.iter().map(|s| s.len() as u64).sum();
    let v = vocab as f64;
    let mut p = (counts.get(&vec![w]).copied().unwrap_or(0) as f64 + alpha) / (total as f64 + alpha * v);
    for k in 1..order.min(context.len() + 1) {
        let h = &context[context.len() - k..];
        // occurrences of h with a successor
        let ch: u64 = corpus
            .iter()
            .map(|s| s.windows(k + 1).filter(|win| &win[..k] == h).count() as u64)
            .sum();
        if ch == 0 {
            continue;
        }
        let mut hw = h.to_vec();
        hw.push(w);
        let c = counts.get(&hw).copied().unwrap_or(0) as f64;
        p = NGRAM_WEIGHT * (c + alpha) / (ch as f64 + alpha * v) + (1.0 - NGRAM_WEIGHT) * p;
    }
    p
}

fn small_corpus(seed: u64) -> Vec<Vec<Token>> {
    use rand::Rng;
    let mut r = rng(seed);
    (0..4)
        .map(|_| (0..r.random_range(1..40)).map(|_| r.random_range(0..12)).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn arrival_codec_round_trips(seed in any::<u64>(), n in 0usize..80) {
        let items = common::random_items(&mut rng(seed), n);
        let tokens = encode_arrival(&items).unwrap();
        prop_assert_eq!(tokens.len(), 3 * n);
        let back = decode_arrival(tokens.tokens()).unwrap();
        let want = if n == 0 { vec![] } else { vec![items] };
        prop_assert_eq!(back, want);
    }

    #[test]
    fn interleave_matches_position_oracle(seed in any::<u64>(), n in 0usize..60, k in 0usize..20, delta in 0u32..2000) {
        let mut r = rng(seed);
        let events = common::random_events(&mut r, n, 5000);
        let controls = common::random_controls(&mut r, k, 6000);
        let seq = interleave(&events, &controls, delta);
        let want = interleave_oracle(&events, &controls, delta);
        prop_assert_eq!(seq.items(), want.as_slice());
    }

    #[test]
    fn interleave_preserves_both_orders(seed in any::<u64>(), n in 0usize..60, k in 0usize..20, delta in 0u32..2000) {
        let mut r = rng(seed);
        let events = common::random_events(&mut r, n, 5000);
        let controls = common::random_controls(&mut r, k, 6000);
        let seq = interleave(&events, &controls, delta);
        prop_assert_eq!(seq.plain_events(), events.clone());
        prop_assert_eq!(seq.controls(), controls.controls().to_vec());
        let mut all = events.into_events();
        all.extend_from_slice(controls.controls());
        prop_assert_eq!(split_and_sort(&seq), EventSequence::new(all, OrderMode::Sort).unwrap().canonicalized());
    }

    #[test]
    fn densify_bounds_gaps(seed in any::<u64>(), n in 1usize..40, target in 1u32..500) {
        let events = common::random_events(&mut rng(seed), n, 9000);
        let dense = densify(&events, target);
        let times: Vec<u32> = dense.iter().map(|e| e.time).collect();
        prop_assert!(times.windows(2).all(|w| w[1] - w[0] <= target || w[1] == w[0]));
        let notes: Vec<_> = dense.iter().filter(|e| !e.is_rest()).copied().collect();
        let originals: Vec<_> = events.iter().filter(|e| !e.is_rest()).copied().collect();
        prop_assert_eq!(notes, originals);
    }

    #[test]
    fn event_text_round_trips(seed in any::<u64>(), n in 1usize..50) {
        let items = common::random_items(&mut rng(seed), n);
        let text = write_event_text([&items]);
        let back = parse_event_text(&text).unwrap();
        prop_assert_eq!(back, vec![items]);
    }

    #[test]
    fn token_file_round_trips(lines in prop::collection::vec(prop::collection::vec(0u32..arrival::VOCAB_SIZE as u32, 1..30), 0..6)) {
        let text = write_token_file(Codec::Arrival, lines.iter().map(|l| l.as_slice()));
        let (codec, back) = read_token_file(&text).unwrap();
        prop_assert_eq!(codec, Codec::Arrival);
        prop_assert_eq!(back, lines);
    }

    #[test]
    fn predictor_protocol_round_trips(ctx in prop::collection::vec(0u32..1000, 1..50), weights in prop::collection::vec(0.0f64..1.0, 2..20)) {
        prop_assert_eq!(parse_request(&format_request(&ctx)).unwrap(), ctx);
        let total: f64 = weights.iter().sum::<f64>() + 1.0;
        let dist: Vec<f64> = weights.iter().map(|w| w / total).chain([1.0 / total]).collect();
        let back = parse_response(&format_response(&dist, 0.0), dist.len()).unwrap();
        for (a, b) in dist.iter().zip(&back) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn ngram_matches_count_oracle(seed in any::<u64>(), order in 1usize..5, ctx in prop::collection::vec(0u32..12, 0..6), w in 0u32..16) {
        let corpus = small_corpus(seed);
        let mut model = train_ngram(corpus.iter().map(Vec::as_slice), order, 0.5, 16).unwrap();
        let dist = model.next_distribution(&ctx).unwrap();
        validate_distribution(&dist).unwrap();
        let want = ngram_oracle(&corpus, order, 0.5, 16, &ctx, w);
        prop_assert!((dist[w as usize] - want).abs() < 1e-12, "{} vs {}", dist[w as usize], want);
        prop_assert!((model.probability(&ctx, w).unwrap() - want).abs() < 1e-12);
    }

    #[test]
    fn ngram_ignores_tokens_beyond_its_order(seed in any::<u64>(), prefix in prop::collection::vec(0u32..12, 0..10), tail in prop::collection::vec(0u32..12, 3..4)) {
        let corpus = small_corpus(seed);
        let mut model = train_ngram(corpus.iter().map(Vec::as_slice), 3, 0.1, 16).unwrap();
        let mut long = vec![tail[0]];
        long.extend(&prefix);
        long.extend(&tail[1..]);
        let short = tail.clone();
        prop_assert_eq!(model.next_distribution(&long).unwrap(), model.next_distribution(&short).unwrap());
    }

    #[test]
    fn ngram_json_round_trips(seed in any::<u64>()) {
        let corpus = small_corpus(seed);
        let model = train_ngram(corpus.iter().map(Vec::as_slice), 3, 0.2, 16).unwrap();
        let json = model.to_json().unwrap();
        let mut back = NGramModel::from_json(&json).unwrap();
        prop_assert_eq!(back.to_json().unwrap(), json);
        let mut model = model;
        prop_assert_eq!(back.next_distribution(&[1, 2]).unwrap(), model.next_distribution(&[1, 2]).unwrap());
    }

    #[test]
    fn nucleus_support_is_minimal_prefix(weights in prop::collection::vec(0.0f64..1.0, 1..30), p in 0.01f64..1.0) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let total: f64 = weights.iter().sum();
        let support = nucleus_support(&weights, p).unwrap();
        let mass: f64 = support.iter().map(|&(_, q)| q).sum();
        prop_assert!(mass >= p * total * (1.0 - 1e-9));
        let without_last: f64 = mass - support.last().unwrap().1;
        prop_assert!(without_last < p * total);
        prop_assert!(support.windows(2).all(|w| w[0].1 >= w[1].1));
        let min_kept = support.last().unwrap().1;
        let kept: Vec<usize> = support.iter().map(|&(i, _)| i).collect();
        for (i, &q) in weights.iter().enumerate() {
            if !kept.contains(&i) {
                prop_assert!(q <= min_kept);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn replayed_sampling_equals_offline_interleave(seed in any::<u64>(), n in 0usize..80, k in 0usize..20, delta in prop::sample::select(vec![0.5, 1.0, 2.0, 5.0])) {
        let mut r = rng(seed);
        let events = common::random_events(&mut r, n, 9000);
        let controls = common::random_controls(&mut r, k, 9000);
        let tokens = encode_arrival(&InterleavedSequence::from_events(&events)).unwrap().into_tokens();
        let mut replay = ReplayPredictor::new(tokens, arrival::SEP, arrival::VOCAB_SIZE);
        let config = SamplerConfig { delta, seed, ..SamplerConfig::default() };
        let out = generate_anticipatory(&mut replay, &controls, ControlCode::Aar, &config).unwrap();
        prop_assert_eq!(out.sequence, interleave(&events, &controls, config.delta_ticks()));
    }

    #[test]
    fn baseline_keeps_events_and_controls(seed in any::<u64>(), n in 0usize..60, k in 0usize..15) {
        let mut r = rng(seed);
        let events = common::random_events(&mut r, n, 9000);
        let controls = common::random_controls(&mut r, k, 9000);
        let tokens = encode_arrival(&InterleavedSequence::from_events(&events)).unwrap().into_tokens();
        let mut replay = ReplayPredictor::new(tokens, arrival::SEP, arrival::VOCAB_SIZE);
        let out = generate_autoregressive_infill(&mut replay, &controls, &SamplerConfig::default()).unwrap();
        prop_assert_eq!(out.sequence.controls(), controls.controls().to_vec());
        prop_assert!(out.sequence.items().iter().filter(|i| i.tag == Tag::Event).count() <= n);
    }

    #[test]
    fn ngram_sampling_is_deterministic(seed in 0u64..1000) {
        let corpus: Vec<Vec<Token>> = (0..3u64)
            .map(|s| {
                let items = InterleavedSequence::from_events(&common::random_events(&mut rng(s), 40, 3000));
                let mut t = vec![ControlCode::Ar.token()];
                t.extend(encode_arrival(&items).unwrap().into_tokens());
                t
            })
            .collect();
        let model = train_ngram(corpus.iter().map(Vec::as_slice), 3, 0.01, arrival::VOCAB_SIZE).unwrap();
        let config = SamplerConfig { seed, max_tokens: 120, ..SamplerConfig::default() };
        let controls = common::random_controls(&mut rng(seed), 5, 3000);
        let a = generate_anticipatory(&mut model.clone(), &controls, ControlCode::Aar, &config).unwrap();
        let b = generate_anticipatory(&mut model.clone(), &controls, ControlCode::Aar, &config).unwrap();
        prop_assert_eq!(&a, &b);
        let times: Vec<u32> = a.sequence.items().iter().filter(|i| i.tag == Tag::Event).map(|i| i.event.time).collect();
        prop_assert!(times.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(a.sequence.controls(), controls.controls().to_vec());
    }
}

#[test]
fn augmentation_is_deterministic_and_thread_independent() {
    let mut r = rng(3);
    let dataset: Vec<EventSequence> = (0..5).map(|_| common::midi_safe(&mut r, 80)).collect();
    let policy = AugmentationPolicy::default();
    let a = augment_corpus(&dataset, &policy, 11).unwrap();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = single.install(|| augment_corpus(&dataset, &policy, 11).unwrap());
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let c = four.install(|| augment_corpus(&dataset, &policy, 11).unwrap());
    assert_eq!(a.copies, b.copies);
    assert_eq!(a.copies, c.copies);
    assert_eq!(a.packed, c.packed);
    let other = augment_corpus(&dataset, &policy, 12).unwrap();
    assert_ne!(a.copies, other.copies);
}
