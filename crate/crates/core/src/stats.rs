//! Corpus distribution summaries: tokens per sequence and instantaneous
//! tokens per second.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::Result;
use crate::event::{EventSequence, TICKS_PER_SECOND};
use crate::tokenize::{encode_interarrival, interarrival, Codec, TRIPLE};

/// Length of the rate window in ticks.
pub const RATE_WINDOW: u32 = TICKS_PER_SECOND;
/// Step between rate windows in ticks.
pub const RATE_HOP: u32 = TICKS_PER_SECOND / 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistogramMetric {
    TokensPerSequence,
    TokensPerSecond,
}

impl HistogramMetric {
    pub fn name(self) -> &'static str {
        match self {
            HistogramMetric::TokensPerSequence => "tokens-per-sequence",
            HistogramMetric::TokensPerSecond => "tokens-per-second",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub metric: HistogramMetric,
    pub bin_width: f64,
    /// `(low, high, count)`, contiguous from the lowest occupied bin.
    pub bins: Vec<(f64, f64, u64)>,
    pub count: u64,
    pub mean: f64,
    pub std_dev: f64,
}

impl Histogram {
    /// Bins `samples` into `[k*w, (k+1)*w)`.
    pub fn from_samples(metric: HistogramMetric, bin_width: f64, samples: &[f64]) -> Self {
        assert!(bin_width > 0.0, "bin width must be positive");
        let count = samples.len() as u64;
        let mean = if samples.is_empty() { 0.0 } else { samples.iter().sum::<f64>() / count as f64 };
        let var = if samples.is_empty() {
            0.0
        } else {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / count as f64
        };
        let mut bins = Vec::new();
        if !samples.is_empty() {
            let key = |x: f64| (x / bin_width).floor() as i64;
            let lo = samples.iter().map(|&x| key(x)).min().unwrap();
            let hi = samples.iter().map(|&x| key(x)).max().unwrap();
            let mut counts = vec![0u64; (hi - lo + 1) as usize];
            for &x in samples {
                counts[(key(x) - lo) as usize] += 1;
            }
            bins = counts
                .into_iter()
                .enumerate()
                .map(|(i, c)| {
                    let k = (lo + i as i64) as f64;
                    (k * bin_width, (k + 1.0) * bin_width, c)
                })
                .collect();
        }
        Histogram {
            metric,
            bin_width,
            bins,
            count,
            mean,
            std_dev: var.sqrt(),
        }
    }

    /// Mean recomputed from bin midpoints.
    pub fn binned_mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.bins
            .iter()
            .map(|&(lo, hi, c)| (lo + hi) / 2.0 * c as f64)
            .sum::<f64>()
            / self.count as f64
    }

    /// `bin_low bin_high count` rows and a summary footer.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("bin_low\tbin_high\tcount\n");
        for &(lo, hi, c) in &self.bins {
            let _ = writeln!(out, "{lo}\t{hi}\t{c}");
        }
        let _ = writeln!(
            out,
            "# metric={} count={} mean={:.6} std={:.6}",
            self.metric.name(),
            self.count,
            self.mean,
            self.std_dev
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramConfig {
    pub length_bin: f64,
    pub rate_bin: f64,
}

impl Default for HistogramConfig {
    fn default() -> Self {
        HistogramConfig {
            length_bin: 100.0,
            rate_bin: 5.0,
        }
    }
}

/// Time (ticks) of each token of `seq` under `codec`, events only.
pub fn token_times(seq: &EventSequence, codec: Codec) -> Result<Vec<u32>> {
    Ok(match codec {
        Codec::Arrival => seq
            .iter()
            .flat_map(|e| std::iter::repeat_n(e.time, TRIPLE))
            .collect(),
        Codec::Interarrival => {
            let mut clock = 0;
            encode_interarrival(seq)?
                .tokens()
                .iter()
                .map(|&t| {
                    if t < interarrival::ONSET_OFFSET {
                        clock += t;
                    }
                    clock
                })
                .collect()
        }
    })
}

/// Token counts of every 1 s window, hopping by 100 ms, over the span of the
/// sequence. Empty sequences yield no windows.
pub fn window_rates(times: &[u32]) -> Vec<f64> {
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Vec::new();
    };
    let mut rates = Vec::new();
    let mut start = first - first % RATE_HOP;
    loop {
        let lo = times.partition_point(|&t| t < start);
        let hi = times.partition_point(|&t| t < start + RATE_WINDOW);
        rates.push((hi - lo) as f64 * f64::from(TICKS_PER_SECOND) / f64::from(RATE_WINDOW));
        if start + RATE_WINDOW > last {
            return rates;
        }
        start += RATE_HOP;
    }
}

/// Histograms of sequence length and instantaneous rate, in tokens.
pub fn corpus_histograms(
    corpus: &[EventSequence],
    codec: Codec,
    config: HistogramConfig,
) -> Result<(Histogram, Histogram)> {
    let per_seq: Vec<(f64, Vec<f64>)> = corpus
        .par_iter()
        .map(|seq| {
            let times = token_times(seq, codec)?;
            Ok((times.len() as f64, window_rates(&times)))
        })
        .collect::<Result<_>>()?;
    let lengths: Vec<f64> = per_seq.iter().map(|p| p.0).collect();
    let rates: Vec<f64> = per_seq.into_iter().flat_map(|p| p.1).collect();
    Ok((
        Histogram::from_samples(HistogramMetric::TokensPerSequence, config.length_bin, &lengths),
        Histogram::from_samples(HistogramMetric::TokensPerSecond, config.rate_bin, &rates),
    ))
}
