//! Anticipatory sampling, the autoregressive infilling baseline, and nucleus
//! sampling.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::anticipation::{
    next_anticipated_controls, seconds_as_ticks, ControlCursor, InterleavedSequence, Item, Tag,
};
use crate::error::{Error, Result};
use crate::event::{ControlSequence, Event, EventSequence, MAX_TIME};
use crate::predictor::Predictor;
use crate::tokenize::{arrival, decode_triple, item_tokens, ControlCode, Token, Triple, CONTEXT_LEN, TRIPLE};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Anticipation interval in seconds.
    pub delta: f64,
    pub top_p: f64,
    /// Budget of sampled tokens; generation stops (truncated) before exceeding it.
    pub max_tokens: usize,
    pub grammar_mask: bool,
    pub seed: u64,
    pub context_len: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            delta: 5.0,
            top_p: 0.95,
            max_tokens: 3 * 1000,
            grammar_mask: true,
            seed: 0,
            context_len: CONTEXT_LEN,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(Error::invalid(format!("top_p must be in (0, 1], got {}", self.top_p)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::invalid(format!("delta must be positive, got {}", self.delta)));
        }
        if self.context_len < 2 * TRIPLE + 1 {
            return Err(Error::invalid("context length too small for a single triple"));
        }
        Ok(())
    }

    pub fn delta_ticks(&self) -> u32 {
        seconds_as_ticks(self.delta)
    }
}

/// Samples a token by nucleus (top-p) sampling: keep the smallest set of most
/// probable tokens holding mass `p`, renormalize, draw.
pub fn nucleus_sample<R: Rng + ?Sized>(dist: &[f64], p: f64, rng: &mut R) -> Result<Token> {
    Ok(draw(&nucleus_support(dist, p)?, rng))
}

/// The renormalization set of [`nucleus_sample`], most probable first.
pub fn nucleus_support(dist: &[f64], p: f64) -> Result<Vec<(usize, f64)>> {
    nucleus_of(candidates(dist, 0..dist.len(), None), p)
}

/// Non-zero entries of `dist` inside `range`, plus `extra` if given.
fn candidates(dist: &[f64], range: Range<usize>, extra: Option<usize>) -> Vec<(usize, f64)> {
    let lo = range.start.min(dist.len());
    let hi = range.end.min(dist.len()).max(lo);
    let mut out: Vec<(usize, f64)> = dist[lo..hi]
        .iter()
        .enumerate()
        .filter(|&(_, &q)| q > 0.0)
        .map(|(i, &q)| (lo + i, q))
        .collect();
    if let Some(t) = extra.filter(|&t| t < dist.len() && dist[t] > 0.0 && !(lo..hi).contains(&t)) {
        out.push((t, dist[t]));
    }
    out
}

fn nucleus_of(mut ranked: Vec<(usize, f64)>, p: f64) -> Result<Vec<(usize, f64)>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Sampling(format!("top_p {p} outside (0, 1]")));
    }
    let total: f64 = ranked.iter().map(|&(_, q)| q).sum();
    if ranked.is_empty() || !total.is_finite() {
        return Err(Error::Sampling("distribution has no mass".into()));
    }
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let target = p * total * (1.0 - 1e-12);
    let mut cum = 0.0;
    let mut keep = ranked.len();
    for (i, &(_, q)) in ranked.iter().enumerate() {
        cum += q;
        if cum >= target {
            keep = i + 1;
            break;
        }
    }
    ranked.truncate(keep);
    Ok(ranked)
}

fn draw<R: Rng + ?Sized>(support: &[(usize, f64)], rng: &mut R) -> Token {
    let mass: f64 = support.iter().map(|&(_, q)| q).sum();
    let mut u = rng.random::<f64>() * mass;
    for &(t, q) in support {
        if u < q {
            return t as Token;
        }
        u -= q;
    }
    support.last().expect("non-empty support").0 as Token
}

/// Output of a generation run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generation {
    pub sequence: InterleavedSequence,
    /// Tokens drawn from the predictor.
    pub sampled_tokens: usize,
    /// The token budget ran out before a SEP was sampled.
    pub truncated: bool,
}

#[derive(Debug, Clone, Copy)]
enum Entry {
    Sep,
    Item(Item),
}

/// Generation history and context assembly.
struct History {
    entries: Vec<Entry>,
    /// Triples that fit in the context beside the code and a partial triple.
    window: usize,
}

impl History {
    fn new(context_len: usize) -> Self {
        History {
            entries: vec![Entry::Sep],
            window: (context_len - 1) / TRIPLE - 1,
        }
    }

    /// Visible suffix of the history: at most `window` triples spanning less
    /// than the time range. Times are shifted by the window's earliest time
    /// unless the opening SEP is still visible. Returns the tokens and the
    /// shift.
    fn context(&self) -> Result<(Vec<Token>, u32)> {
        let mut start = self.entries.len();
        let (mut lo, mut hi) = (u32::MAX, 0u32);
        while start > 0 && self.entries.len() - start < self.window {
            let t = match self.entries[start - 1] {
                Entry::Sep => 0,
                Entry::Item(item) => item.event.time,
            };
            let (nlo, nhi) = (lo.min(t), hi.max(t));
            if nhi - nlo >= MAX_TIME {
                break;
            }
            (lo, hi) = (nlo, nhi);
            start -= 1;
        }
        let visible = &self.entries[start..];
        let shift = match visible.first() {
            Some(Entry::Sep) | None => 0,
            Some(Entry::Item(_)) => lo,
        };
        let mut tokens = Vec::with_capacity(visible.len() * TRIPLE);
        for entry in visible {
            match entry {
                Entry::Sep => tokens.extend([arrival::SEP; TRIPLE]),
                Entry::Item(item) => {
                    let mut shifted = *item;
                    shifted.event.time -= shift;
                    tokens.extend(item_tokens(&shifted)?);
                }
            }
        }
        Ok((tokens, shift))
    }
}

enum Sampled {
    Sep,
    Event(Event),
}

struct Sampler<'p, P: ?Sized> {
    predictor: &'p mut P,
    config: SamplerConfig,
    code: Token,
    rng: ChaCha8Rng,
    history: History,
    last_time: Option<u32>,
    sampled: usize,
}

impl<'p, P: Predictor + ?Sized> Sampler<'p, P> {
    fn new(predictor: &'p mut P, code: ControlCode, config: &SamplerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Sampler {
            predictor,
            config: *config,
            code: code.token(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            history: History::new(config.context_len),
            last_time: None,
            sampled: 0,
        })
    }

    fn out_of_budget(&self) -> bool {
        self.sampled + TRIPLE > self.config.max_tokens
    }

    /// Tokens the grammar allows in `slot`: a contiguous range, plus SEP
    /// in the time slot.
    fn allowed(&self, slot: usize, partial: &[Token], shift: u32) -> (Range<usize>, Option<usize>) {
        let range = match slot {
            0 => {
                let lo = self.last_time.map_or(0, |l| l.saturating_sub(shift));
                arrival::TIME_OFFSET + lo..arrival::DUR_OFFSET
            }
            1 => arrival::DUR_OFFSET..arrival::NOTE_OFFSET,
            _ if partial[1] == arrival::DUR_OFFSET => arrival::NOTE_OFFSET..arrival::REST + 1,
            _ => arrival::NOTE_OFFSET..arrival::REST,
        };
        let sep = (slot == 0).then_some(arrival::SEP as usize);
        (range.start as usize..range.end as usize, sep)
    }

    /// Samples one triple (or a SEP) from the predictor.
    fn sample_event(&mut self) -> Result<Sampled> {
        let (window, shift) = self.history.context()?;
        let mut partial: Vec<Token> = Vec::with_capacity(TRIPLE);
        let mut context = Vec::with_capacity(1 + window.len() + TRIPLE);
        while partial.len() < TRIPLE {
            context.clear();
            context.push(self.code);
            context.extend_from_slice(&window);
            context.extend_from_slice(&partial);
            let dist = self.predictor.next_distribution(&context)?;
            let cands = if self.config.grammar_mask {
                let (range, extra) = self.allowed(partial.len(), &partial, shift);
                candidates(&dist, range, extra)
            } else {
                candidates(&dist, 0..dist.len(), None)
            };
            let tok = draw(&nucleus_of(cands, self.config.top_p)?, &mut self.rng);
            self.sampled += 1;
            if partial.is_empty() && tok == arrival::SEP {
                return Ok(Sampled::Sep);
            }
            partial.push(tok);
        }
        let triple = [partial[0], partial[1], partial[2]];
        match decode_triple(triple, self.history.entries.len())? {
            Triple::Item(Item { event, tag: Tag::Event }) => {
                let mut event = event;
                event.time += shift;
                Ok(Sampled::Event(event))
            }
            _ => Err(Error::TokenStructure {
                index: self.history.entries.len(),
                message: format!("sampled triple {triple:?} is not a plain event"),
            }),
        }
    }

    fn push(&mut self, item: Item) {
        self.history.entries.push(Entry::Item(item));
    }
}

/// Anticipatory autoregressive sampling. After each sampled event at time
/// `t`, every pending control with time `<= t + delta` is appended; then the
/// next event is drawn from the predictor. Stops at a sampled SEP or when the
/// token budget runs out; controls never reached are appended at the end.
pub fn generate_anticipatory<P: Predictor + ?Sized>(
    predictor: &mut P,
    controls: &ControlSequence,
    code: ControlCode,
    config: &SamplerConfig,
) -> Result<Generation> {
    let mut s = Sampler::new(predictor, code, config)?;
    let delta = config.delta_ticks();
    let mut cursor = ControlCursor::new(controls);
    let mut out = Vec::new();
    let mut truncated = false;
    loop {
        for &u in next_anticipated_controls(s.last_time, &mut cursor, delta) {
            s.push(Item::control(u));
            out.push(Item::control(u));
        }
        if s.out_of_budget() {
            truncated = true;
            break;
        }
        match s.sample_event()? {
            Sampled::Sep => break,
            Sampled::Event(e) => {
                s.push(Item::event(e));
                out.push(Item::event(e));
                s.last_time = Some(e.time);
            }
        }
    }
    out.extend(cursor.drain().iter().copied().map(Item::control));
    Ok(Generation {
        sequence: InterleavedSequence::from_items(out),
        sampled_tokens: s.sampled,
        truncated,
    })
}

/// Baseline infilling: draw an event, insert every pending control with time
/// `<= time(event)` before it, append the event. Controls enter the model
/// history as ordinary events but are tagged as controls in the output.
pub fn generate_autoregressive_infill<P: Predictor + ?Sized>(
    predictor: &mut P,
    controls: &ControlSequence,
    config: &SamplerConfig,
) -> Result<Generation> {
    let mut s = Sampler::new(predictor, ControlCode::Ar, config)?;
    let pending = controls.controls();
    let mut next = 0;
    let mut out = Vec::new();
    let mut truncated = false;
    loop {
        if s.out_of_budget() {
            truncated = true;
            break;
        }
        let e = match s.sample_event()? {
            Sampled::Sep => break,
            Sampled::Event(e) => e,
        };
        while next < pending.len() && pending[next].time <= e.time {
            s.push(Item::event(pending[next]));
            out.push(Item::control(pending[next]));
            next += 1;
        }
        s.push(Item::event(e));
        out.push(Item::event(e));
        s.last_time = Some(e.time);
    }
    out.extend(pending[next..].iter().copied().map(Item::control));
    Ok(Generation {
        sequence: InterleavedSequence::from_items(out),
        sampled_tokens: s.sampled,
        truncated,
    })
}

/// Plain events of a generation, in order.
pub fn strip_controls(seq: &InterleavedSequence) -> EventSequence {
    seq.plain_events()
}
