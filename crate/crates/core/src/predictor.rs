//! Next-token distributions: the predictor contract, a count-based n-gram
//! model, replay and uniform references, and a subprocess bridge.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenize::{Token, CONTEXT_LEN};

/// Tolerance on the total mass of a next-token distribution.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A model of `p(next token | context)`.
///
/// `context[0]` is the control code; the remaining tokens are history. An
/// implementation may look at no more than the last `context_len() - 1`
/// history tokens.
pub trait Predictor {
    fn vocab_size(&self) -> usize;

    fn context_len(&self) -> usize {
        CONTEXT_LEN
    }

    fn next_distribution(&mut self, context: &[Token]) -> Result<Vec<f64>>;

    /// Probability of a single token. Override when cheaper than the full
    /// distribution.
    fn probability(&mut self, context: &[Token], token: Token) -> Result<f64> {
        let dist = self.next_distribution(context)?;
        Ok(dist.get(token as usize).copied().unwrap_or(0.0))
    }
}

impl<P: Predictor + ?Sized> Predictor for &mut P {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }

    fn context_len(&self) -> usize {
        (**self).context_len()
    }

    fn next_distribution(&mut self, context: &[Token]) -> Result<Vec<f64>> {
        (**self).next_distribution(context)
    }

    fn probability(&mut self, context: &[Token], token: Token) -> Result<f64> {
        (**self).probability(context, token)
    }
}

/// Checks non-negativity and unit mass.
pub fn validate_distribution(dist: &[f64]) -> Result<()> {
    if let Some(i) = dist.iter().position(|p| !(*p >= 0.0) || !p.is_finite()) {
        return Err(Error::Predictor(format!("entry {i} is {}", dist[i])));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Predictor(format!("distribution sums to {total}")));
    }
    Ok(())
}

/// The part of `context` a predictor with window `m` may see: the control
/// code and the last `m - 1` history tokens.
pub fn visible_context(context: &[Token], m: usize) -> (Option<Token>, &[Token]) {
    match context.split_first() {
        None => (None, context),
        Some((&code, history)) => {
            let keep = history.len().min(m.saturating_sub(1));
            (Some(code), &history[history.len() - keep..])
        }
    }
}

/// Same probability for every token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformPredictor {
    pub vocab_size: usize,
}

impl Predictor for UniformPredictor {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_distribution(&mut self, _context: &[Token]) -> Result<Vec<f64>> {
        Ok(vec![1.0 / self.vocab_size as f64; self.vocab_size])
    }

    fn probability(&mut self, _context: &[Token], _token: Token) -> Result<f64> {
        Ok(1.0 / self.vocab_size as f64)
    }
}

/// Emits a fixed token sequence as point masses, one per call, ignoring the
/// context. Emits `end` once exhausted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayPredictor {
    tokens: Vec<Token>,
    cursor: usize,
    end: Token,
    vocab_size: usize,
}

impl ReplayPredictor {
    pub fn new(tokens: Vec<Token>, end: Token, vocab_size: usize) -> Self {
        ReplayPredictor {
            tokens,
            cursor: 0,
            end,
            vocab_size,
        }
    }

    pub fn position(&self) -> usize {
        self.cursor
    }

    fn next_token(&mut self) -> Token {
        let tok = self.tokens.get(self.cursor).copied().unwrap_or(self.end);
        self.cursor += 1;
        tok
    }
}

impl Predictor for ReplayPredictor {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_distribution(&mut self, _context: &[Token]) -> Result<Vec<f64>> {
        let tok = self.next_token() as usize;
        if tok >= self.vocab_size {
            return Err(Error::Predictor(format!("replayed token {tok} outside the vocabulary")));
        }
        let mut dist = vec![0.0; self.vocab_size];
        dist[tok] = 1.0;
        Ok(dist)
    }

    fn probability(&mut self, _context: &[Token], token: Token) -> Result<f64> {
        Ok(if self.next_token() == token { 1.0 } else { 0.0 })
    }
}

/// Weight kept by a seen context; the rest goes to the next lower order.
pub const NGRAM_WEIGHT: f64 = 0.6;

/// Count-based model with add-α smoothing and fixed interpolation to lower
/// orders.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    alpha: f64,
    vocab_size: usize,
    /// `tables[k]` maps a history of length `k` to successor counts.
    tables: Vec<HashMap<Vec<Token>, Successors>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct Successors {
    total: u64,
    counts: HashMap<Token, u64>,
}

/// Trains an order-`order` model on token sequences. Each sequence is
/// counted independently; histories do not cross sequence boundaries.
pub fn train_ngram<'a, I>(corpus: I, order: usize, alpha: f64, vocab_size: usize) -> Result<NGramModel>
where
    I: IntoIterator<Item = &'a [Token]>,
{
    if order == 0 {
        return Err(Error::Training("order must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Training(format!("alpha must be positive, got {alpha}")));
    }
    let mut tables: Vec<HashMap<Vec<Token>, Successors>> = vec![HashMap::new(); order];
    let mut seen = 0usize;
    for seq in corpus {
        for (i, &tok) in seq.iter().enumerate() {
            if tok as usize >= vocab_size {
                return Err(Error::TokenRange {
                    index: i,
                    token: tok,
                    codec: "n-gram vocabulary",
                });
            }
            seen += 1;
            for (k, table) in tables.iter_mut().enumerate() {
                if k > i {
                    break;
                }
                let entry = table.entry(seq[i - k..i].to_vec()).or_default();
                entry.total += 1;
                *entry.counts.entry(tok).or_default() += 1;
            }
        }
    }
    if seen == 0 {
        return Err(Error::Training("empty corpus".into()));
    }
    Ok(NGramModel {
        order,
        alpha,
        vocab_size,
        tables,
    })
}

#[derive(Serialize, Deserialize)]
struct StoredModel {
    order: usize,
    alpha: f64,
    vocab_size: usize,
    /// One entry per history, orders ascending, histories sorted.
    contexts: Vec<StoredContext>,
}

#[derive(Serialize, Deserialize)]
struct StoredContext {
    history: Vec<Token>,
    counts: BTreeMap<Token, u64>,
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Number of distinct histories per order.
    pub fn context_counts(&self) -> Vec<usize> {
        self.tables.iter().map(HashMap::len).collect()
    }

    fn history<'c>(&self, context: &'c [Token]) -> &'c [Token] {
        // the control code counts as history, so short contexts see it
        let keep = context.len().min(self.order - 1);
        &context[context.len() - keep..]
    }

    fn smoothed(&self, s: Option<&Successors>, tok: Token) -> Option<f64> {
        let s = s?;
        let c = s.counts.get(&tok).copied().unwrap_or(0) as f64;
        Some((c + self.alpha) / (s.total as f64 + self.alpha * self.vocab_size as f64))
    }

    fn token_probability(&self, history: &[Token], tok: Token) -> f64 {
        let mut p = self
            .smoothed(self.tables[0].get(&[][..]), tok)
            .expect("unigram table is never empty");
        for k in 1..=history.len() {
            let h = &history[history.len() - k..];
            if let Some(pk) = self.smoothed(self.tables[k].get(h), tok) {
                p = NGRAM_WEIGHT * pk + (1.0 - NGRAM_WEIGHT) * p;
            }
        }
        p
    }

    pub fn to_json(&self) -> Result<String> {
        let mut contexts = Vec::new();
        for table in &self.tables {
            let mut histories: Vec<&Vec<Token>> = table.keys().collect();
            histories.sort();
            contexts.extend(histories.into_iter().map(|h| StoredContext {
                history: h.clone(),
                counts: table[h].counts.iter().map(|(&t, &c)| (t, c)).collect(),
            }));
        }
        let stored = StoredModel {
            order: self.order,
            alpha: self.alpha,
            vocab_size: self.vocab_size,
            contexts,
        };
        Ok(serde_json::to_string(&stored)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let stored: StoredModel = serde_json::from_str(text)?;
        if stored.order == 0 || !(stored.alpha > 0.0) {
            return Err(Error::Config("stored model has invalid order or alpha".into()));
        }
        let mut tables: Vec<HashMap<Vec<Token>, Successors>> = vec![HashMap::new(); stored.order];
        for ctx in stored.contexts {
            let k = ctx.history.len();
            let table = tables
                .get_mut(k)
                .ok_or_else(|| Error::Config(format!("history of length {k} exceeds the order")))?;
            let counts: HashMap<Token, u64> = ctx.counts.into_iter().collect();
            let total = counts.values().sum();
            table.insert(ctx.history, Successors { total, counts });
        }
        if tables[0].is_empty() {
            return Err(Error::Config("stored model has no unigram counts".into()));
        }
        Ok(NGramModel {
            order: stored.order,
            alpha: stored.alpha,
            vocab_size: stored.vocab_size,
            tables,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::at_path(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::at_path(path, e))?;
        Self::from_json(&text)
    }
}

impl Predictor for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn next_distribution(&mut self, context: &[Token]) -> Result<Vec<f64>> {
        let (code, history) = visible_context(context, self.context_len());
        let mut full: Vec<Token> = code.into_iter().collect();
        full.extend_from_slice(history);
        let history = self.history(&full);

        let v = self.vocab_size as f64;
        let uni = &self.tables[0][&[][..]];
        let uni_denom = uni.total as f64 + self.alpha * v;
        let mut dist = vec![self.alpha / uni_denom; self.vocab_size];
        for (&t, &c) in &uni.counts {
            dist[t as usize] = (c as f64 + self.alpha) / uni_denom;
        }
        for k in 1..=history.len() {
            let Some(s) = self.tables[k].get(&history[history.len() - k..]) else {
                continue;
            };
            let denom = s.total as f64 + self.alpha * v;
            let base = NGRAM_WEIGHT * self.alpha / denom;
            for p in dist.iter_mut() {
                *p = (1.0 - NGRAM_WEIGHT) * *p + base;
            }
            for (&t, &c) in &s.counts {
                dist[t as usize] += NGRAM_WEIGHT * c as f64 / denom;
            }
        }
        Ok(dist)
    }

    fn probability(&mut self, context: &[Token], token: Token) -> Result<f64> {
        if token as usize >= self.vocab_size {
            return Ok(0.0);
        }
        let (code, history) = visible_context(context, self.context_len());
        let mut full: Vec<Token> = code.into_iter().collect();
        full.extend_from_slice(history);
        Ok(self.token_probability(self.history(&full), token))
    }
}

/// Formats a request line of the subprocess protocol.
pub fn format_request(context: &[Token]) -> String {
    let mut line = String::from("CTX");
    for t in context {
        line.push(' ');
        line.push_str(&t.to_string());
    }
    line
}

/// Parses a request line into its tokens (control code first).
pub fn parse_request(line: &str) -> Result<Vec<Token>> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("CTX") {
        return Err(Error::Predictor(format!("expected CTX request, got {line:?}")));
    }
    let tokens: Vec<Token> = parts
        .map(|p| p.parse().map_err(|_| Error::Predictor(format!("bad token {p:?}"))))
        .collect::<Result<_>>()?;
    if tokens.is_empty() {
        return Err(Error::Predictor("CTX request without a control code".into()));
    }
    Ok(tokens)
}

/// Formats a sparse response; entries below `floor` are dropped.
pub fn format_response(dist: &[f64], floor: f64) -> String {
    let mut line = String::from("DIST");
    for (t, &p) in dist.iter().enumerate() {
        if p > floor {
            line.push_str(&format!(" {t}:{p:e}"));
        }
    }
    line
}

/// Parses a sparse response into a dense distribution, renormalizing mass
/// lost to dropped entries.
pub fn parse_response(line: &str, vocab_size: usize) -> Result<Vec<f64>> {
    let malformed = |m: String| Error::Predictor(format!("malformed response: {m}"));
    let mut parts = line.split_whitespace();
    if parts.next() != Some("DIST") {
        return Err(malformed(format!("expected DIST, got {line:?}")));
    }
    let mut dist = vec![0.0; vocab_size];
    for pair in parts {
        let (t, p) = pair
            .split_once(':')
            .ok_or_else(|| malformed(format!("pair {pair:?}")))?;
        let t: usize = t.parse().map_err(|_| malformed(format!("token {t:?}")))?;
        let p: f64 = p.parse().map_err(|_| malformed(format!("probability {p:?}")))?;
        if t >= vocab_size || !(p >= 0.0) || !p.is_finite() {
            return Err(malformed(format!("pair {pair:?}")));
        }
        dist[t] += p;
    }
    let total: f64 = dist.iter().sum();
    if !(total > 0.0) || (total - 1.0).abs() > 1e-3 {
        return Err(malformed(format!("mass {total}")));
    }
    dist.iter_mut().for_each(|p| *p /= total);
    Ok(dist)
}

/// Answers protocol requests from `input` with `predictor` until EOF.
pub fn serve_predictor<P, R, W>(predictor: &mut P, input: R, mut output: W) -> Result<usize>
where
    P: Predictor + ?Sized,
    R: BufRead,
    W: Write,
{
    let mut served = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let context = parse_request(&line)?;
        let dist = predictor.next_distribution(&context)?;
        writeln!(output, "{}", format_response(&dist, 0.0))?;
        output.flush()?;
        served += 1;
    }
    Ok(served)
}

/// A predictor running in another process, speaking the line protocol over
/// its standard streams.
pub struct ExternalPredictor {
    child: Child,
    stdin: BufWriter<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    vocab_size: usize,
    context_len: usize,
    timeout: Duration,
}

impl ExternalPredictor {
    pub fn spawn(mut command: Command, vocab_size: usize, timeout: Duration) -> Result<Self> {
        let mut child = command
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()?;
        let stdin = BufWriter::new(child.stdin.take().expect("piped stdin"));
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        std::thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(ExternalPredictor {
            child,
            stdin,
            lines: rx,
            vocab_size,
            context_len: CONTEXT_LEN,
            timeout,
        })
    }

    pub fn with_context_len(mut self, m: usize) -> Self {
        self.context_len = m;
        self
    }
}

impl Predictor for ExternalPredictor {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn context_len(&self) -> usize {
        self.context_len
    }

    fn next_distribution(&mut self, context: &[Token]) -> Result<Vec<f64>> {
        let (code, history) = visible_context(context, self.context_len);
        let mut visible: Vec<Token> = code.into_iter().collect();
        visible.extend_from_slice(history);
        writeln!(self.stdin, "{}", format_request(&visible))?;
        self.stdin.flush()?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(line) => parse_response(&line?, self.vocab_size),
            Err(RecvTimeoutError::Timeout) => Err(Error::PredictorTimeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                Err(Error::Predictor("predictor process closed its output".into()))
            }
        }
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
