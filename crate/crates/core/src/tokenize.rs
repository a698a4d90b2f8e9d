//! Arrival-time and interarrival-time token codecs, plus training-example
//! packing.

use std::fmt;
use std::str::FromStr;

use crate::anticipation::{InterleavedSequence, Item, Tag};
use crate::error::{Error, Result};
use crate::event::{
    Event, EventSequence, Note, NoteCode, OrderMode, QuantizedDuration, MAX_DURATION, MAX_TIME,
};

pub type Token = u32;

/// Arrival-time vocabulary layout.
pub mod arrival {
    use super::Token;

    pub const TIME_OFFSET: Token = 0;
    pub const DUR_OFFSET: Token = 10_000;
    pub const NOTE_OFFSET: Token = 11_000;
    pub const REST: Token = 27_512;
    /// Distance between an event token and its anticipated counterpart.
    pub const CONTROL_OFFSET: Token = 27_513;
    pub const ATIME_OFFSET: Token = TIME_OFFSET + CONTROL_OFFSET;
    pub const ADUR_OFFSET: Token = DUR_OFFSET + CONTROL_OFFSET;
    pub const ANOTE_OFFSET: Token = NOTE_OFFSET + CONTROL_OFFSET;
    pub const SEP: Token = 55_025;
    pub const AR: Token = 55_026;
    pub const AAR: Token = 55_027;
    pub const VOCAB_SIZE: usize = 55_028;
}

/// Interarrival-time vocabulary layout.
pub mod interarrival {
    use super::Token;

    pub const GAP_OFFSET: Token = 0;
    pub const ONSET_OFFSET: Token = 1_000;
    pub const OFFSET_OFFSET: Token = 17_512;
    pub const SEP: Token = 34_024;
    pub const VOCAB_SIZE: usize = 34_025;
}

/// Tokens per arrival-time event.
pub const TRIPLE: usize = 3;
/// Default model context length.
pub const CONTEXT_LEN: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Codec {
    Arrival,
    Interarrival,
}

impl Codec {
    pub fn vocab_size(self) -> usize {
        match self {
            Codec::Arrival => arrival::VOCAB_SIZE,
            Codec::Interarrival => interarrival::VOCAB_SIZE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Codec::Arrival => "arrival",
            Codec::Interarrival => "interarrival",
        }
    }

    pub fn sep(self) -> Token {
        match self {
            Codec::Arrival => arrival::SEP,
            Codec::Interarrival => interarrival::SEP,
        }
    }
}

impl fmt::Display for Codec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Codec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arrival" => Ok(Codec::Arrival),
            "interarrival" => Ok(Codec::Interarrival),
            other => Err(Error::invalid(format!("unknown codec {other:?}"))),
        }
    }
}

/// The global control code prefixed to every training example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ControlCode {
    /// No anticipated controls.
    Ar,
    /// Anticipated controls present.
    Aar,
}

impl ControlCode {
    pub fn token(self) -> Token {
        match self {
            ControlCode::Ar => arrival::AR,
            ControlCode::Aar => arrival::AAR,
        }
    }

    pub fn from_token(token: Token) -> Option<Self> {
        match token {
            arrival::AR => Some(ControlCode::Ar),
            arrival::AAR => Some(ControlCode::Aar),
            _ => None,
        }
    }

    pub fn for_sequence(seq: &InterleavedSequence) -> Self {
        if seq.has_controls() {
            ControlCode::Aar
        } else {
            ControlCode::Ar
        }
    }
}

/// What an arrival-time token denotes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenClass {
    Time,
    Duration,
    Note,
    Rest,
    ControlTime,
    ControlDuration,
    ControlNote,
    Sep,
    ControlCode,
}

/// Classifies an arrival-time token, or `None` when it is out of vocabulary.
pub fn classify_arrival(token: Token) -> Option<TokenClass> {
    use arrival::*;
    Some(match token {
        t if t < DUR_OFFSET => TokenClass::Time,
        t if t < NOTE_OFFSET => TokenClass::Duration,
        t if t < REST => TokenClass::Note,
        REST => TokenClass::Rest,
        t if t < ADUR_OFFSET => TokenClass::ControlTime,
        t if t < ANOTE_OFFSET => TokenClass::ControlDuration,
        t if t < SEP => TokenClass::ControlNote,
        SEP => TokenClass::Sep,
        AR | AAR => TokenClass::ControlCode,
        _ => return None,
    })
}

/// Integer tokens tagged with the codec that produced them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    codec: Codec,
    tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new(codec: Codec, tokens: Vec<Token>) -> Result<Self> {
        check_vocab(codec, &tokens)?;
        Ok(TokenSequence { codec, tokens })
    }

    pub fn codec(&self) -> Codec {
        self.codec
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

fn check_vocab(codec: Codec, tokens: &[Token]) -> Result<()> {
    let limit = codec.vocab_size() as Token;
    match tokens.iter().position(|&t| t >= limit) {
        Some(index) => Err(Error::TokenRange {
            index,
            token: tokens[index],
            codec: codec.name(),
        }),
        None => Ok(()),
    }
}

/// Arrival tokens of a single item. The time must already be relativized.
pub fn item_tokens(item: &Item) -> Result<[Token; 3]> {
    item_tokens_at(item, 0)
}

fn item_tokens_at(item: &Item, index: usize) -> Result<[Token; 3]> {
    let e = &item.event;
    if e.time >= MAX_TIME {
        return Err(Error::TimeRange {
            index,
            value: e.time,
            limit: MAX_TIME,
        });
    }
    let plain = match e.note {
        Note::Pitched(code) => [
            arrival::TIME_OFFSET + e.time,
            arrival::DUR_OFFSET + e.duration.get(),
            arrival::NOTE_OFFSET + code.get(),
        ],
        Note::Rest => {
            if item.tag == Tag::Control {
                return Err(Error::Unsupported(format!("REST control at item {index}")));
            }
            [arrival::TIME_OFFSET + e.time, arrival::DUR_OFFSET, arrival::REST]
        }
    };
    Ok(match item.tag {
        Tag::Event => plain,
        Tag::Control => plain.map(|t| t + arrival::CONTROL_OFFSET),
    })
}

/// Arrival-time tokenization: three tokens per item, controls shifted into the
/// anticipated ranges.
pub fn encode_arrival(seq: &InterleavedSequence) -> Result<TokenSequence> {
    let mut tokens = Vec::with_capacity(seq.len() * TRIPLE);
    for (index, item) in seq.items().iter().enumerate() {
        tokens.extend(item_tokens_at(item, index)?);
    }
    Ok(TokenSequence {
        codec: Codec::Arrival,
        tokens,
    })
}

/// Decoded content of one arrival-time triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triple {
    Sep,
    Item(Item),
}

/// Decodes one triple; `index` is used for error reporting.
pub fn decode_triple(triple: [Token; 3], index: usize) -> Result<Triple> {
    use arrival::*;
    let [t, d, n] = triple;
    if triple == [SEP; 3] {
        return Ok(Triple::Sep);
    }
    let err = |message: String| Error::TokenStructure { index, message };
    let class = |tok| {
        classify_arrival(tok).ok_or_else(|| err(format!("token {tok} outside the vocabulary")))
    };
    let (tc, dc, nc) = (class(t)?, class(d)?, class(n)?);
    let (tag, base) = match (tc, dc, nc) {
        (TokenClass::Time, TokenClass::Duration, TokenClass::Note | TokenClass::Rest) => {
            (Tag::Event, 0)
        }
        (TokenClass::ControlTime, TokenClass::ControlDuration, TokenClass::ControlNote) => {
            (Tag::Control, CONTROL_OFFSET)
        }
        _ => {
            return Err(err(format!(
                "slots hold {tc:?}, {dc:?}, {nc:?} ({t}, {d}, {n})"
            )))
        }
    };
    let time = t - base - TIME_OFFSET;
    let duration = d - base - DUR_OFFSET;
    let event = if nc == TokenClass::Rest {
        if duration != 0 {
            return Err(err(format!("REST with duration {duration}")));
        }
        Event::rest(time)
    } else {
        Event::new(
            time,
            QuantizedDuration::new(duration)?,
            NoteCode::new(n - base - NOTE_OFFSET)?,
        )
    };
    Ok(Triple::Item(Item { event, tag }))
}

/// Inverse of [`encode_arrival`]. A SEP triple starts a new sequence; items
/// before the first SEP form a leading sequence only when non-empty. A single
/// leading control code is skipped.
pub fn decode_arrival(tokens: &[Token]) -> Result<Vec<InterleavedSequence>> {
    let body = match tokens.first() {
        Some(&t) if tokens.len() % TRIPLE == 1 && ControlCode::from_token(t).is_some() => {
            &tokens[1..]
        }
        _ => tokens,
    };
    if body.len() % TRIPLE != 0 {
        return Err(Error::TokenStructure {
            index: body.len() / TRIPLE,
            message: format!("{} tokens is not a whole number of triples", body.len()),
        });
    }
    let mut sequences = Vec::new();
    let mut current: Vec<Item> = Vec::new();
    let mut started = false;
    for (index, chunk) in body.chunks_exact(TRIPLE).enumerate() {
        match decode_triple([chunk[0], chunk[1], chunk[2]], index)? {
            Triple::Sep => {
                if started || !current.is_empty() {
                    sequences.push(InterleavedSequence::from_items(std::mem::take(&mut current)));
                }
                started = true;
            }
            Triple::Item(item) => current.push(item),
        }
    }
    if started || !current.is_empty() {
        sequences.push(InterleavedSequence::from_items(current));
    }
    Ok(sequences)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Edge {
    Offset,
    Onset,
    ZeroOffset,
}

/// Interarrival-time tokenization. Onsets and offsets are ordered by time;
/// at equal times offsets of sounding notes come before onsets, and the offset
/// of a zero-length note follows its onset. Zero gaps are omitted and gaps
/// longer than 9.99 s are clamped. A leading gap encodes the first onset time.
pub fn encode_interarrival(seq: &EventSequence) -> Result<TokenSequence> {
    use interarrival::*;
    let mut edges = Vec::with_capacity(seq.len() * 2);
    for (i, e) in seq.iter().enumerate() {
        let Note::Pitched(code) = e.note else {
            return Err(Error::Unsupported(format!(
                "REST at event {i} has no interarrival encoding"
            )));
        };
        edges.push((e.time, Edge::Onset, ONSET_OFFSET + code.get()));
        let kind = if e.duration.get() == 0 {
            Edge::ZeroOffset
        } else {
            Edge::Offset
        };
        edges.push((e.end(), kind, OFFSET_OFFSET + code.get()));
    }
    edges.sort_by_key(|&(time, kind, _)| (time, kind));

    let mut tokens = Vec::with_capacity(edges.len() * 2);
    let mut clock = 0;
    for (time, _, token) in edges {
        let gap = time - clock;
        if gap > 0 {
            tokens.push(GAP_OFFSET + gap.min(MAX_DURATION - 1));
        }
        tokens.push(token);
        clock = time;
    }
    Ok(TokenSequence {
        codec: Codec::Interarrival,
        tokens,
    })
}

/// Interarrival encoding of an interleaved sequence; anticipated controls have
/// no representation in this codec.
pub fn encode_interarrival_items(seq: &InterleavedSequence) -> Result<TokenSequence> {
    if let Some(i) = seq.items().iter().position(Item::is_control) {
        return Err(Error::Unsupported(format!(
            "control at item {i} cannot be interarrival-encoded"
        )));
    }
    encode_interarrival(&seq.plain_events())
}

/// Result of interarrival decoding.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct InterarrivalDecode {
    pub sequences: Vec<EventSequence>,
    /// Onsets left open at the end of a sequence (closed with a 9.99 s duration).
    pub unclosed: usize,
}

/// Inverse of [`encode_interarrival`]; SEP tokens separate sequences.
pub fn decode_interarrival(tokens: &[Token]) -> Result<Vec<EventSequence>> {
    Ok(decode_interarrival_report(tokens)?.sequences)
}

pub fn decode_interarrival_report(tokens: &[Token]) -> Result<InterarrivalDecode> {
    use interarrival::*;
    check_vocab(Codec::Interarrival, tokens)?;
    let mut out = InterarrivalDecode::default();
    let mut state = InterarrivalState::default();
    let mut started = false;
    for (index, &token) in tokens.iter().enumerate() {
        match token {
            SEP => {
                if started || !state.is_empty() {
                    let (seq, unclosed) = std::mem::take(&mut state).finish();
                    out.sequences.push(seq);
                    out.unclosed += unclosed;
                }
                started = true;
            }
            t if t < ONSET_OFFSET => state.clock += t - GAP_OFFSET,
            t if t < OFFSET_OFFSET => state.onset(t - ONSET_OFFSET),
            t => state.offset(t - OFFSET_OFFSET, index)?,
        }
    }
    if started || !state.is_empty() {
        let (seq, unclosed) = state.finish();
        out.sequences.push(seq);
        out.unclosed += unclosed;
    }
    Ok(out)
}

#[derive(Default)]
struct InterarrivalState {
    clock: u32,
    // (onset time, note, duration once closed)
    notes: Vec<(u32, u32, Option<u32>)>,
    open: std::collections::HashMap<u32, std::collections::VecDeque<usize>>,
}

impl InterarrivalState {
    fn is_empty(&self) -> bool {
        self.notes.is_empty() && self.clock == 0
    }

    fn onset(&mut self, note: u32) {
        self.open.entry(note).or_default().push_back(self.notes.len());
        self.notes.push((self.clock, note, None));
    }

    fn offset(&mut self, note: u32, index: usize) -> Result<()> {
        let slot = self
            .open
            .get_mut(&note)
            .and_then(|q| q.pop_front())
            .ok_or_else(|| Error::Pairing {
                index,
                message: format!("offset of note {note} without an open onset"),
            })?;
        let entry = &mut self.notes[slot];
        entry.2 = Some(self.clock - entry.0);
        Ok(())
    }

    fn finish(self) -> (EventSequence, usize) {
        let mut unclosed = 0;
        let events = self
            .notes
            .into_iter()
            .map(|(time, note, duration)| {
                let duration = duration.unwrap_or_else(|| {
                    unclosed += 1;
                    MAX_DURATION - 1
                });
                Event::new(
                    time,
                    QuantizedDuration::clamped(duration),
                    NoteCode::new(note).expect("onset tokens cover exactly the note codes"),
                )
            })
            .collect();
        (
            EventSequence::new(events, OrderMode::Sort).expect("sorting cannot fail"),
            unclosed,
        )
    }
}

/// A fixed-length packed example: a control code followed by whole triples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    tokens: Vec<Token>,
}

impl TrainingExample {
    pub fn new(tokens: Vec<Token>) -> Result<Self> {
        let first = tokens
            .first()
            .copied()
            .ok_or_else(|| Error::invalid("empty training example"))?;
        if ControlCode::from_token(first).is_none() {
            return Err(Error::invalid(format!(
                "training example starts with {first}, not a control code"
            )));
        }
        if (tokens.len() - 1) % TRIPLE != 0 {
            return Err(Error::invalid("training example body is not whole triples"));
        }
        check_vocab(Codec::Arrival, &tokens)?;
        Ok(TrainingExample { tokens })
    }

    pub fn control_code(&self) -> ControlCode {
        ControlCode::from_token(self.tokens[0]).expect("checked at construction")
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PackConfig {
    /// Example length including the control code; `(len - 1)` must be a
    /// multiple of three.
    pub context_len: usize,
    /// Emit the trailing partial window instead of dropping it.
    pub keep_partial: bool,
}

impl Default for PackConfig {
    fn default() -> Self {
        PackConfig {
            context_len: CONTEXT_LEN,
            keep_partial: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Packed {
    pub examples: Vec<TrainingExample>,
    /// For each example, the input sequence whose control code it carries.
    pub sources: Vec<usize>,
    /// Windows dropped because a segment spanned 100 s or more.
    pub discarded: usize,
}

/// Packs interleaved sequences (absolute times) into fixed-length examples.
///
/// Each sequence is preceded by a SEP triple in the stream. Windows hold
/// `(context_len - 1) / 3` triples and never split a triple. The control code
/// of a window is that of the sequence owning its first triple. Within a
/// window every SEP-delimited segment is shifted so its earliest time is zero;
/// windows with a segment spanning 100 s or more are discarded.
pub fn pack_training_examples<'a, I>(sequences: I, config: PackConfig) -> Result<Packed>
where
    I: IntoIterator<Item = &'a InterleavedSequence>,
{
    if config.context_len < 1 + TRIPLE || (config.context_len - 1) % TRIPLE != 0 {
        return Err(Error::invalid(format!(
            "context length {} is not 1 + 3k",
            config.context_len
        )));
    }
    let per_window = (config.context_len - 1) / TRIPLE;
    let mut stream: Vec<(usize, Triple)> = Vec::new();
    let mut codes = Vec::new();
    for (s, seq) in sequences.into_iter().enumerate() {
        codes.push(ControlCode::for_sequence(seq));
        stream.push((s, Triple::Sep));
        stream.extend(seq.items().iter().map(|&item| (s, Triple::Item(item))));
    }

    let mut packed = Packed::default();
    for window in stream.chunks(per_window) {
        if window.len() < per_window && !config.keep_partial {
            break;
        }
        let source = window[0].0;
        match encode_window(codes[source], window)? {
            Some(tokens) => {
                packed.examples.push(TrainingExample { tokens });
                packed.sources.push(source);
            }
            None => packed.discarded += 1,
        }
    }
    Ok(packed)
}

fn encode_window(code: ControlCode, window: &[(usize, Triple)]) -> Result<Option<Vec<Token>>> {
    let mut tokens = Vec::with_capacity(1 + window.len() * TRIPLE);
    tokens.push(code.token());
    for segment in window.split(|(_, t)| *t == Triple::Sep).enumerate() {
        let (i, segment) = segment;
        if i > 0 {
            tokens.extend([arrival::SEP; 3]);
        }
        let items = segment.iter().filter_map(|(_, t)| match t {
            Triple::Item(item) => Some(*item),
            Triple::Sep => None,
        });
        let Some(origin) = items.clone().map(|i| i.event.time).min() else {
            continue;
        };
        let span = items.clone().map(|i| i.event.time).max().unwrap_or(origin) - origin;
        if span >= MAX_TIME {
            return Ok(None);
        }
        for (index, mut item) in items.enumerate() {
            item.event.time -= origin;
            tokens.extend(item_tokens_at(&item, index)?);
        }
    }
    Ok(Some(tokens))
}

/// Serializes token lines with the `#codec=... vocab=...` header.
pub fn write_token_file<'a, I>(codec: Codec, lines: I) -> String
where
    I: IntoIterator<Item = &'a [Token]>,
{
    let mut out = format!("#codec={} vocab={}\n", codec.name(), codec.vocab_size());
    for line in lines {
        let text: Vec<String> = line.iter().map(Token::to_string).collect();
        out.push_str(&text.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a token file, validating the header and every token.
pub fn read_token_file(text: &str) -> Result<(Codec, Vec<Vec<Token>>)> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::TextFormat {
        line: 1,
        message: "missing header".into(),
    })?;
    let bad_header = || Error::TextFormat {
        line: 1,
        message: format!("expected `#codec=<name> vocab=<size>`, got {header:?}"),
    };
    let rest = header.strip_prefix("#codec=").ok_or_else(bad_header)?;
    let (name, vocab) = rest.split_once(" vocab=").ok_or_else(bad_header)?;
    let codec: Codec = name.trim().parse().map_err(|_| bad_header())?;
    let vocab: usize = vocab.trim().parse().map_err(|_| bad_header())?;
    if vocab != codec.vocab_size() {
        return Err(Error::TextFormat {
            line: 1,
            message: format!("vocab {vocab} does not match {codec} ({})", codec.vocab_size()),
        });
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let tokens = line
            .split_whitespace()
            .map(|t| {
                t.parse::<Token>().map_err(|_| Error::TextFormat {
                    line: i + 1,
                    message: format!("bad token {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        check_vocab(codec, &tokens).map_err(|e| Error::TextFormat {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(tokens);
    }
    Ok((codec, out))
}
