//! Log-loss accounting: per-slot losses, per-event perplexity, bits per
//! second.

use std::fmt::Write as _;

use crate::anticipation::InterleavedSequence;
use crate::error::{Error, Result};
use crate::event::EventSequence;
use crate::predictor::Predictor;
use crate::tokenize::{
    arrival, classify_arrival, encode_interarrival, interarrival, pack_training_examples, Codec,
    ControlCode, PackConfig, Token, TokenClass, TRIPLE,
};

/// Which part of the token grammar a scored token belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LossSlot {
    Time,
    Duration,
    Note,
    Sep,
    /// Anticipated tokens; excluded from event loss.
    Control,
    /// Interarrival gap, onset and offset tokens.
    Interarrival,
}

impl LossSlot {
    pub const ALL: [LossSlot; 6] = [
        LossSlot::Time,
        LossSlot::Duration,
        LossSlot::Note,
        LossSlot::Sep,
        LossSlot::Control,
        LossSlot::Interarrival,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossSlot::Time => "time",
            LossSlot::Duration => "duration",
            LossSlot::Note => "note",
            LossSlot::Sep => "sep",
            LossSlot::Control => "control",
            LossSlot::Interarrival => "interarrival",
        }
    }

    fn index(self) -> usize {
        self as usize
    }

    /// Slot of a token under `codec`, or `None` for a control code.
    pub fn of(codec: Codec, token: Token) -> Option<LossSlot> {
        match codec {
            Codec::Interarrival if token == interarrival::SEP => Some(LossSlot::Sep),
            Codec::Interarrival => Some(LossSlot::Interarrival),
            Codec::Arrival => match classify_arrival(token)? {
                TokenClass::Time => Some(LossSlot::Time),
                TokenClass::Duration => Some(LossSlot::Duration),
                TokenClass::Note | TokenClass::Rest => Some(LossSlot::Note),
                TokenClass::Sep => Some(LossSlot::Sep),
                TokenClass::ControlTime | TokenClass::ControlDuration | TokenClass::ControlNote => {
                    Some(LossSlot::Control)
                }
                TokenClass::ControlCode => None,
            },
        }
    }
}

/// Summed negative log-likelihood (nats) and token count of one slot.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SlotLoss {
    pub nats: f64,
    pub tokens: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossSums {
    pub codec: Option<Codec>,
    slots: [SlotLoss; 6],
}

impl LossSums {
    pub fn new(codec: Codec) -> Self {
        LossSums {
            codec: Some(codec),
            ..Default::default()
        }
    }

    pub fn slot(&self, slot: LossSlot) -> SlotLoss {
        self.slots[slot.index()]
    }

    pub fn add(&mut self, slot: LossSlot, nats: f64) {
        let s = &mut self.slots[slot.index()];
        s.nats += nats;
        s.tokens += 1;
    }

    pub fn merge(&mut self, other: &LossSums) {
        for (a, b) in self.slots.iter_mut().zip(&other.slots) {
            a.nats += b.nats;
            a.tokens += b.tokens;
        }
    }

    /// Event tokens plus separators; controls excluded.
    pub fn scored(&self) -> SlotLoss {
        let mut total = SlotLoss::default();
        for slot in LossSlot::ALL {
            if slot != LossSlot::Control {
                total.nats += self.slot(slot).nats;
                total.tokens += self.slot(slot).tokens;
            }
        }
        total
    }
}

/// Scores every token of every sequence under `predictor`.
///
/// A sequence that starts with a control code uses it as the context code;
/// otherwise AR (arrival) or SEP (interarrival) is prepended as the context
/// start. Control codes are never scored. The context passed at each step is
/// the code plus the last `context_len() - 1` tokens.
pub fn cross_entropy<P, S>(predictor: &mut P, corpus: &[S], codec: Codec) -> Result<LossSums>
where
    P: Predictor + ?Sized,
    S: AsRef<[Token]>,
{
    let window = predictor.context_len().saturating_sub(1).max(1);
    let mut sums = LossSums::new(codec);
    for (sequence, tokens) in corpus.iter().enumerate() {
        let tokens = tokens.as_ref();
        let (code, body) = match (codec, tokens.first()) {
            (Codec::Arrival, Some(&t)) if ControlCode::from_token(t).is_some() => (t, &tokens[1..]),
            (Codec::Arrival, _) => (arrival::AR, tokens),
            (Codec::Interarrival, _) => (interarrival::SEP, tokens),
        };
        let mut context = Vec::with_capacity(window + 1);
        for (position, &token) in body.iter().enumerate() {
            let Some(slot) = LossSlot::of(codec, token) else {
                continue;
            };
            context.clear();
            context.push(code);
            context.extend_from_slice(&body[position.saturating_sub(window)..position]);
            let p = predictor.probability(&context, token)?;
            if !(p > 0.0) {
                return Err(Error::InfiniteLoss {
                    sequence,
                    position,
                    token,
                });
            }
            sums.add(slot, -p.ln());
        }
    }
    Ok(sums)
}

/// Loss of a held-out event corpus under the arrival codec with z = AR.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub sums: LossSums,
    /// Seconds of the scored sequences.
    pub seconds: f64,
    pub sequences: usize,
    /// Sequences skipped because a window spanned 100 s or more.
    pub excluded: usize,
}

impl Evaluation {
    pub fn report(&self) -> Result<LossReport> {
        LossReport::new(&self.sums, self.seconds)
    }
}

/// Packs each sequence on its own (SEP triple first, trailing partial window
/// kept) and scores every example.
pub fn evaluate_events<P>(predictor: &mut P, corpus: &[EventSequence], context_len: usize) -> Result<Evaluation>
where
    P: Predictor + ?Sized,
{
    let config = PackConfig {
        context_len,
        keep_partial: true,
    };
    let mut eval = Evaluation {
        sums: LossSums::new(Codec::Arrival),
        seconds: 0.0,
        sequences: 0,
        excluded: 0,
    };
    for seq in corpus {
        let packed = pack_training_examples([&InterleavedSequence::from_events(seq)], config)?;
        if packed.discarded > 0 {
            eval.excluded += 1;
            continue;
        }
        let examples: Vec<&[Token]> = packed.examples.iter().map(|e| e.tokens()).collect();
        eval.sums.merge(&cross_entropy(predictor, &examples, Codec::Arrival)?);
        eval.seconds += seq.seconds();
        eval.sequences += 1;
    }
    Ok(eval)
}

/// Token and duration totals of an event corpus under one codec.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub codec: Codec,
    pub tokens: u64,
    pub seconds: f64,
}

impl CorpusStats {
    pub fn from_hours(codec: Codec, tokens: u64, hours: f64) -> Self {
        CorpusStats {
            codec,
            tokens,
            seconds: hours * 3600.0,
        }
    }
}

/// Whether per-sequence framing tokens are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Framing {
    /// Event tokens only.
    EventsOnly,
    /// Plus the separator (a SEP triple and a control code for arrival, one
    /// SEP for interarrival).
    #[default]
    WithSeparators,
}

/// Counts tokens under `codec` and sums sequence lengths (to the last note
/// offset) in seconds.
pub fn corpus_stats<'a, I>(corpus: I, codec: Codec, framing: Framing) -> Result<CorpusStats>
where
    I: IntoIterator<Item = &'a EventSequence>,
{
    let mut tokens = 0u64;
    let mut seconds = 0.0;
    for seq in corpus {
        let body = match codec {
            Codec::Arrival => seq.len() * TRIPLE,
            Codec::Interarrival => encode_interarrival(seq)?.len(),
        };
        let frame = match (framing, codec) {
            (Framing::EventsOnly, _) => 0,
            (Framing::WithSeparators, Codec::Arrival) => TRIPLE + 1,
            (Framing::WithSeparators, Codec::Interarrival) => 1,
        };
        tokens += (body + frame) as u64;
        seconds += seq.seconds();
    }
    Ok(CorpusStats {
        codec,
        tokens,
        seconds,
    })
}

/// Converts a mean loss in nats per token into bits per second of music.
pub fn bits_per_second(nats_per_token: f64, stats: &CorpusStats) -> Result<f64> {
    if !(nats_per_token >= 0.0) {
        return Err(Error::Metric(format!("loss must be non-negative, got {nats_per_token}")));
    }
    if !(stats.seconds > 0.0) {
        return Err(Error::Metric("corpus has zero seconds".into()));
    }
    Ok(nats_per_token / std::f64::consts::LN_2 * stats.tokens as f64 / stats.seconds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub codec: Codec,
    /// Over event tokens and separators.
    pub nats_per_token: f64,
    /// Per-event perplexity from time, duration and note slots (arrival only).
    pub ppl_event: Option<f64>,
    /// Same, with separator loss spread over events plus separators.
    pub ppl_event_with_sep: Option<f64>,
    pub ppl_time: Option<f64>,
    pub ppl_duration: Option<f64>,
    pub ppl_note: Option<f64>,
    pub sep_nats: f64,
    pub bits_per_second: f64,
    pub tokens: usize,
    pub seconds: f64,
}

impl LossReport {
    /// `seconds` is the duration of the scored music.
    pub fn new(sums: &LossSums, seconds: f64) -> Result<Self> {
        let codec = sums.codec.ok_or_else(|| Error::Metric("loss sums carry no codec".into()))?;
        let scored = sums.scored();
        if scored.tokens == 0 {
            return Err(Error::Metric("no tokens were scored".into()));
        }
        let nats_per_token = scored.nats / scored.tokens as f64;
        let stats = CorpusStats {
            codec,
            tokens: scored.tokens as u64,
            seconds,
        };
        let bps = bits_per_second(nats_per_token, &stats)?;

        let mean = |slot| {
            let s = sums.slot(slot);
            (s.tokens > 0).then(|| s.nats / s.tokens as f64)
        };
        let (lt, ld, ln) = match codec {
            Codec::Arrival => (mean(LossSlot::Time), mean(LossSlot::Duration), mean(LossSlot::Note)),
            Codec::Interarrival => (None, None, None),
        };
        let events = sums.slot(LossSlot::Time).tokens;
        let seps = sums.slot(LossSlot::Sep).tokens / TRIPLE;
        let event_nats = [LossSlot::Time, LossSlot::Duration, LossSlot::Note]
            .map(|s| sums.slot(s).nats)
            .iter()
            .sum::<f64>();
        let ppl_event_with_sep = (codec == Codec::Arrival && events + seps > 0).then(|| {
            ((event_nats + sums.slot(LossSlot::Sep).nats) / (events + seps) as f64).exp()
        });
        Ok(LossReport {
            codec,
            nats_per_token,
            ppl_event: match (lt, ld, ln) {
                (Some(a), Some(b), Some(c)) => Some(event_perplexity(a, b, c)),
                _ => None,
            },
            ppl_event_with_sep,
            ppl_time: lt.map(f64::exp),
            ppl_duration: ld.map(f64::exp),
            ppl_note: ln.map(f64::exp),
            sep_nats: sums.slot(LossSlot::Sep).nats,
            bits_per_second: bps,
            tokens: scored.tokens,
            seconds,
        })
    }

    fn fields(&self) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"));
        vec![
            ("codec", self.codec.name().to_string()),
            ("nats_per_token", format!("{:.6}", self.nats_per_token)),
            ("ppl_event", opt(self.ppl_event)),
            ("ppl_event_with_sep", opt(self.ppl_event_with_sep)),
            ("ppl_time", opt(self.ppl_time)),
            ("ppl_duration", opt(self.ppl_duration)),
            ("ppl_note", opt(self.ppl_note)),
            ("sep_nats", format!("{:.6}", self.sep_nats)),
            ("bits_per_second", format!("{:.6}", self.bits_per_second)),
            ("tokens", self.tokens.to_string()),
            ("seconds", format!("{:.3}", self.seconds)),
        ]
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// Header line and one data row, tab-separated.
    pub fn to_tsv(&self) -> String {
        let fields = self.fields();
        let header: Vec<&str> = fields.iter().map(|f| f.0).collect();
        let row: Vec<&str> = fields.iter().map(|f| f.1.as_str()).collect();
        format!("{}\n{}\n", header.join("\t"), row.join("\t"))
    }
}

/// Per-event perplexity from mean slot losses in nats.
pub fn event_perplexity(time: f64, duration: f64, note: f64) -> f64 {
    (time + duration + note).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, OrderMode};
    use crate::predictor::{ReplayPredictor, UniformPredictor};

    #[test]
    fn table_row_two_bits_per_second() {
        let stats = CorpusStats::from_hours(Codec::Arrival, 125_050_497, 560.98);
        let bps = bits_per_second(14.9f64.ln() / 3.0, &stats).unwrap();
        assert!((bps - 80.4).abs() < 0.1, "{bps}");
        assert_eq!(bits_per_second(0.0, &stats).unwrap(), 0.0);
        let double = CorpusStats { tokens: 2 * stats.tokens, ..stats };
        let l = 0.7;
        assert_eq!(bits_per_second(l, &double).unwrap(), 2.0 * bits_per_second(l, &stats).unwrap());
        assert!(bits_per_second(1.0, &CorpusStats { seconds: 0.0, ..stats }).is_err());
        assert!(bits_per_second(-1.0, &stats).is_err());
    }

    #[test]
    fn decomposition() {
        let ppl = event_perplexity(1.59f64.ln(), 3.90f64.ln(), 2.40f64.ln());
        assert!((ppl - 14.9).abs() < 0.1);
        assert!((ppl - 14.8824).abs() < 1e-3);
    }

    #[test]
    fn uniform_loss_is_log_vocab() {
        let mut u = UniformPredictor { vocab_size: arrival::VOCAB_SIZE };
        let corpus = vec![vec![arrival::AR, 0, 10_050, 11_060, 50, 10_050, 11_062]];
        let sums = cross_entropy(&mut u, &corpus, Codec::Arrival).unwrap();
        let s = sums.scored();
        assert_eq!(s.tokens, 6);
        assert!((s.nats / 6.0 - (55_028f64).ln()).abs() < 1e-12);
        let r = LossReport::new(&sums, 1.0).unwrap();
        let product = r.ppl_time.unwrap() * r.ppl_duration.unwrap() * r.ppl_note.unwrap();
        assert!((r.ppl_event.unwrap() / product - 1.0).abs() < 1e-9);
    }

    #[test]
    fn replay_loss_is_zero() {
        let body = vec![0, 10_050, 11_060, arrival::SEP, arrival::SEP, arrival::SEP];
        let mut replay = ReplayPredictor::new(body.clone(), arrival::SEP, arrival::VOCAB_SIZE);
        let sums = cross_entropy(&mut replay, &[body], Codec::Arrival).unwrap();
        assert_eq!(sums.scored().nats, 0.0);
        assert_eq!(sums.slot(LossSlot::Sep).tokens, 3);
    }

    #[test]
    fn impossible_token_is_located() {
        let mut replay = ReplayPredictor::new(vec![0, 1], arrival::SEP, arrival::VOCAB_SIZE);
        let err = cross_entropy(&mut replay, &[vec![0, 2]], Codec::Arrival).unwrap_err();
        assert!(matches!(err, Error::InfiniteLoss { sequence: 0, position: 1, token: 2 }));
    }

    #[test]
    fn stats_count_framing() {
        let seq = EventSequence::new(
            vec![Event::from_raw(0, 50, 60).unwrap(), Event::from_raw(50, 50, 62).unwrap()],
            OrderMode::Reject,
        )
        .unwrap();
        let a = corpus_stats([&seq], Codec::Arrival, Framing::EventsOnly).unwrap();
        assert_eq!(a.tokens, 6);
        assert_eq!(a.seconds, 1.0);
        let b = corpus_stats([&seq], Codec::Arrival, Framing::WithSeparators).unwrap();
        assert_eq!(b.tokens, 10);
        // onset, gap, offset, onset (zero gap omitted), gap, offset
        let c = corpus_stats([&seq], Codec::Interarrival, Framing::EventsOnly).unwrap();
        assert_eq!(c.tokens, 6);
        let e = corpus_stats(std::iter::empty(), Codec::Arrival, Framing::WithSeparators).unwrap();
        assert_eq!((e.tokens, e.seconds), (0, 0.0));
    }

    #[test]
    fn report_formats() {
        let mut sums = LossSums::new(Codec::Arrival);
        sums.add(LossSlot::Time, 1.0);
        sums.add(LossSlot::Duration, 2.0);
        sums.add(LossSlot::Note, 3.0);
        let r = LossReport::new(&sums, 2.0).unwrap();
        assert!(r.to_key_value().contains("nats_per_token=2.000000\n"));
        let tsv = r.to_tsv();
        let lines: Vec<&str> = tsv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].split('\t').count(), lines[1].split('\t').count());
    }
}
