//! Infilling-control prior and corpus augmentation.
//!
//! Each source sequence is copied `factor` times. A copy either stays verbatim
//! or has a subset of its events marked as controls (a random time span, a
//! random subset of instrument parts, or a random fraction of events); marked
//! copies are densified with RESTs and interleaved before packing.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::anticipation::{densify, interleave, split_by_mask, AnticipationConfig, InterleavedSequence};
use crate::error::{Error, Result};
use crate::event::{ticks_to_seconds, EventSequence};
use crate::tokenize::{pack_training_examples, PackConfig, Packed, TRIPLE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pattern {
    None,
    Span,
    Instrument,
    Random,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::None, Pattern::Span, Pattern::Instrument, Pattern::Random];

    pub fn name(self) -> &'static str {
        match self {
            Pattern::None => "none",
            Pattern::Span => "span",
            Pattern::Instrument => "instrument",
            Pattern::Random => "random",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Pattern::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown pattern {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentationPolicy {
    /// Rate (per second) of span starts.
    pub span_rate: f64,
    /// Length of an anticipated span in seconds.
    pub span_length: f64,
    pub random_rates: Vec<f64>,
    /// Mixture weights in [`Pattern::ALL`] order.
    pub weights: [f64; 4],
    pub factor: usize,
    pub anticipation: AnticipationConfig,
    pub pack: PackConfig,
}

impl Default for AugmentationPolicy {
    fn default() -> Self {
        AugmentationPolicy {
            span_rate: 0.05,
            span_length: 5.0,
            random_rates: (1..=9).map(|k| f64::from(k) / 10.0).collect(),
            weights: [0.1, 0.1, 0.4, 0.4],
            factor: 30,
            anticipation: AnticipationConfig::default(),
            pack: PackConfig::default(),
        }
    }
}

impl AugmentationPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::invalid("mixture weights must be non-negative"));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("mixture weights sum to {total}, not 1")));
        }
        if self.factor == 0 {
            return Err(Error::invalid("augmentation factor must be at least 1"));
        }
        if !(self.span_rate > 0.0 && self.span_length > 0.0) {
            return Err(Error::invalid("span rate and length must be positive"));
        }
        if self.random_rates.is_empty() || self.random_rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::invalid("random rates must be a non-empty set of probabilities"));
        }
        self.anticipation.validate()
    }

    /// Copies per pattern: `weight * factor`, rounded by largest remainder so
    /// the counts sum to `factor`.
    pub fn composition(&self) -> [usize; 4] {
        let exact: Vec<f64> = self.weights.iter().map(|w| w * self.factor as f64).collect();
        let mut counts: [usize; 4] = std::array::from_fn(|i| (exact[i] + 1e-9).floor() as usize);
        let mut short = self.factor - counts.iter().sum::<usize>().min(self.factor);
        let mut order: Vec<usize> = (0..4).collect();
        order.sort_by(|&a, &b| {
            let ra = exact[a] - counts[a] as f64;
            let rb = exact[b] - counts[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for i in order.into_iter().cycle() {
            if short == 0 {
                break;
            }
            counts[i] += 1;
            short -= 1;
        }
        counts
    }

    /// Pattern of each copy index.
    pub fn schedule(&self) -> Vec<Pattern> {
        Pattern::ALL
            .into_iter()
            .zip(self.composition())
            .flat_map(|(p, n)| std::iter::repeat_n(p, n))
            .collect()
    }
}

/// Span start times (seconds) of a Poisson process with rate `rate` on
/// `[0, end]`.
pub fn sample_span_starts<R: Rng + ?Sized>(end: f64, rate: f64, rng: &mut R) -> Vec<f64> {
    let exp = Exp::new(rate).expect("rate must be positive");
    let mut starts = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > end {
            return starts;
        }
        starts.push(t);
    }
}

/// Marks every event with `start <= time <= start + length` for some start.
pub fn span_mask(seq: &EventSequence, starts: &[f64], length: f64) -> Vec<bool> {
    seq.iter()
        .map(|e| {
            let t = ticks_to_seconds(e.time);
            starts.iter().any(|&s| s <= t && t <= s + length)
        })
        .collect()
}

/// Anticipates the events in random spans of `length` seconds started at
/// rate `rate` per second.
pub fn sample_span_controls<R: Rng + ?Sized>(
    seq: &EventSequence,
    rate: f64,
    length: f64,
    rng: &mut R,
) -> Vec<bool> {
    let end = seq.iter().last().map_or(0.0, |e| ticks_to_seconds(e.time));
    let starts = sample_span_starts(end, rate, rng);
    span_mask(seq, &starts, length)
}

/// Picks `j` uniform on `1..J` parts, without replacement. `None` when fewer
/// than two parts exist.
pub fn sample_instrument_parts<R: Rng + ?Sized>(parts: &[u8], rng: &mut R) -> Option<Vec<u8>> {
    if parts.len() < 2 {
        return None;
    }
    let j = rng.random_range(1..parts.len());
    let mut chosen: Vec<u8> = index::sample(rng, parts.len(), j)
        .into_iter()
        .map(|i| parts[i])
        .collect();
    chosen.sort_unstable();
    Some(chosen)
}

/// Anticipates every event of a random subset of instrument parts; `None` if
/// the sequence has fewer than two parts.
pub fn sample_instrument_controls<R: Rng + ?Sized>(
    seq: &EventSequence,
    rng: &mut R,
) -> Option<Vec<bool>> {
    let chosen = sample_instrument_parts(&seq.instruments(), rng)?;
    Some(
        seq.iter()
            .map(|e| e.note.instrument().is_some_and(|k| chosen.contains(&k)))
            .collect(),
    )
}

/// Draws a rate from `rates` and marks each event independently with that
/// probability. Returns the rate and the mask.
pub fn sample_random_controls<R: Rng + ?Sized>(
    seq: &EventSequence,
    rates: &[f64],
    rng: &mut R,
) -> (f64, Vec<bool>) {
    let rate = rates[rng.random_range(0..rates.len())];
    let mask = seq.iter().map(|_| rng.random_bool(rate)).collect();
    (rate, mask)
}

/// Seed of the generator for one (sequence, copy) pair.
pub fn copy_seed(seed: u64, source: usize, copy: usize) -> u64 {
    let mut z = seed
        ^ (source as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
        ^ (copy as u64).wrapping_mul(0xc2b2_ae3d_27d4_eb4f);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedCopy {
    pub source: usize,
    pub copy: usize,
    /// Pattern scheduled for this copy.
    pub pattern: Pattern,
    /// Instrument anticipation fell back to random anticipation.
    pub fallback: bool,
    pub sequence: InterleavedSequence,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AugmentStats {
    /// Tokens of the source corpus, three per event.
    pub base_tokens: usize,
    /// Tokens across all copies before packing.
    pub augmented_tokens: usize,
    /// Of which REST tokens added by densification.
    pub rest_tokens: usize,
}

#[derive(Debug, Clone, Default)]
pub struct AugmentedCorpus {
    pub copies: Vec<AugmentedCopy>,
    pub packed: Packed,
    /// Pattern label of each packed example.
    pub labels: Vec<Pattern>,
    pub stats: AugmentStats,
}

/// Builds one augmented copy.
pub fn augment_sequence(
    seq: &EventSequence,
    pattern: Pattern,
    policy: &AugmentationPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<(InterleavedSequence, bool)> {
    let mut fallback = false;
    let mask = match pattern {
        Pattern::None => return Ok((InterleavedSequence::from_events(seq), false)),
        Pattern::Span => sample_span_controls(seq, policy.span_rate, policy.span_length, rng),
        Pattern::Instrument => match sample_instrument_controls(seq, rng) {
            Some(mask) => mask,
            None => {
                fallback = true;
                sample_random_controls(seq, &policy.random_rates, rng).1
            }
        },
        Pattern::Random => sample_random_controls(seq, &policy.random_rates, rng).1,
    };
    let (plain, controls) = split_by_mask(seq, &mask)?;
    let dense = densify(&plain, policy.anticipation.density_ticks());
    Ok((
        interleave(&dense, &controls, policy.anticipation.delta_ticks()),
        fallback,
    ))
}

/// Augments `dataset` by `policy.factor` and packs the result. Output depends
/// only on the inputs and `seed`, not on thread scheduling.
pub fn augment_corpus(
    dataset: &[EventSequence],
    policy: &AugmentationPolicy,
    seed: u64,
) -> Result<AugmentedCorpus> {
    policy.validate()?;
    let schedule = policy.schedule();
    let per_source: Vec<Vec<AugmentedCopy>> = dataset
        .par_iter()
        .enumerate()
        .map(|(source, seq)| {
            schedule
                .iter()
                .enumerate()
                .map(|(copy, &pattern)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(copy_seed(seed, source, copy));
                    let (sequence, fallback) = augment_sequence(seq, pattern, policy, &mut rng)?;
                    Ok(AugmentedCopy {
                        source,
                        copy,
                        pattern,
                        fallback,
                        sequence,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let copies: Vec<AugmentedCopy> = per_source.into_iter().flatten().collect();

    let stats = AugmentStats {
        base_tokens: dataset.iter().map(|s| s.len() * TRIPLE).sum(),
        augmented_tokens: copies.iter().map(|c| c.sequence.len() * TRIPLE).sum(),
        rest_tokens: copies
            .iter()
            .map(|c| c.sequence.items().iter().filter(|i| i.event.is_rest()).count() * TRIPLE)
            .sum(),
    };
    let packed = pack_training_examples(copies.iter().map(|c| &c.sequence), policy.pack)?;
    let labels = packed.sources.iter().map(|&s| copies[s].pattern).collect();
    Ok(AugmentedCorpus {
        copies,
        packed,
        labels,
        stats,
    })
}
