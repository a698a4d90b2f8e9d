//! The `anticipate` command line: one subcommand per pipeline stage.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for data errors.

use std::collections::HashSet;
use std::ffi::OsString;
use std::fs;
use std::io::{self, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::process::Command as Process;
use std::time::Duration;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::anticipation::{densify, interleave, seconds_as_ticks, AnticipationConfig};
use crate::augment::{augment_corpus, AugmentationPolicy};
use crate::corpus::{preprocess_corpus, write_corpus, CorpusFilters, RejectReason};
use crate::error::Error;
use crate::event::{ControlSequence, EventSequence, OrderMode};
use crate::golden::run_golden;
use crate::metrics::evaluate_events;
use crate::midi::write_midi;
use crate::predictor::{
    serve_predictor, train_ngram, ExternalPredictor, NGramModel, Predictor, UniformPredictor,
};
use crate::sampler::{generate_anticipatory, generate_autoregressive_infill, SamplerConfig};
use crate::stats::{corpus_histograms, HistogramConfig};
use crate::text::{parse_event_sequences, parse_event_text, write_event_sequences, write_event_text};
use crate::tokenize::{
    arrival, decode_arrival, decode_interarrival, encode_arrival, encode_interarrival,
    interarrival, read_token_file, write_token_file, Codec, ControlCode, Token, CONTEXT_LEN,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "ANTICIPATE_SEED";

#[derive(Debug, Parser)]
#[command(name = "anticipate", version, about = "Anticipatory music modeling toolkit")]
struct Cli {
    /// Flat key=value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Parse and filter a directory of MIDI files into split event files.
    Ingest(IngestArgs),
    /// Event text to a token file.
    Tokenize(TokenizeArgs),
    /// Token file to event text.
    Detokenize(DetokenizeArgs),
    /// Insert RESTs so no gap exceeds the target density.
    Densify(DensifyArgs),
    /// Interleave `C `-tagged controls among plain events.
    Interleave(InterleaveArgs),
    /// Build augmented, packed training shards.
    Augment(AugmentArgs),
    /// Train an n-gram model on token files.
    TrainNgram(TrainArgs),
    /// Generate events, optionally conditioned on controls.
    Sample(SampleArgs),
    /// Held-out loss and bits per second.
    Evaluate(EvaluateArgs),
    /// Length and rate histograms of an event corpus.
    Stats(StatsArgs),
    /// Check the reference fixtures.
    Golden,
    /// Answer CTX requests on stdin with a trained model.
    ServePredictor(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodecArg {
    Arrival,
    Interarrival,
}

impl From<CodecArg> for Codec {
    fn from(c: CodecArg) -> Codec {
        match c {
            CodecArg::Arrival => Codec::Arrival,
            CodecArg::Interarrival => Codec::Interarrival,
        }
    }
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Directory searched recursively for .mid/.midi files.
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    min_events: usize,
    #[arg(long, default_value_t = 10.0)]
    min_seconds: f64,
    #[arg(long, default_value_t = 3600.0)]
    max_seconds: f64,
    #[arg(long, default_value_t = 16)]
    max_parts: usize,
}

#[derive(Debug, Args)]
struct TokenizeArgs {
    /// Event text file, or `-` for stdin.
    #[arg(default_value = "-")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = CodecArg::Arrival)]
    codec: CodecArg,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DetokenizeArgs {
    #[arg(default_value = "-")]
    input: PathBuf,
    /// Expected codec; must match the file header when given.
    #[arg(long, value_enum)]
    codec: Option<CodecArg>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DensifyArgs {
    #[arg(default_value = "-")]
    input: PathBuf,
    /// Largest allowed gap in seconds.
    #[arg(long, default_value_t = 1.0)]
    target_density: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InterleaveArgs {
    #[arg(default_value = "-")]
    input: PathBuf,
    /// Anticipation interval in seconds.
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AugmentArgs {
    /// Plain event text (typically train.events).
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    factor: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    target_density: f64,
    #[arg(long, default_value_t = 0.05)]
    span_rate: f64,
    /// Examples per shard.
    #[arg(long, default_value_t = 10_000)]
    shard_size: usize,
    #[arg(long, default_value_t = CONTEXT_LEN)]
    context_len: usize,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Token files (all with the same codec).
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SampleMode {
    Anticipatory,
    Baseline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputKind {
    Events,
    Midi,
}

#[derive(Debug, Args)]
struct PredictorArgs {
    /// Trained n-gram model (JSON).
    #[arg(long, conflicts_with = "predictor_cmd")]
    model: Option<PathBuf>,
    /// Shell command speaking the CTX/DIST protocol.
    #[arg(long)]
    predictor_cmd: Option<String>,
    /// Response timeout for --predictor-cmd, in milliseconds.
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[command(flatten)]
    predictor: PredictorArgs,
    #[arg(long, value_enum, default_value_t = SampleMode::Anticipatory)]
    mode: SampleMode,
    #[arg(long, default_value_t = 0.95)]
    top_p: f64,
    #[arg(long, default_value_t = 5.0)]
    delta: f64,
    /// Event text whose events become controls.
    #[arg(long)]
    controls: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputKind::Events)]
    out: OutputKind,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 3000)]
    max_tokens: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    no_grammar_mask: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Kv,
    Tsv,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    /// Held-out plain event text (typically test.events).
    input: PathBuf,
    #[command(flatten)]
    predictor: PredictorArgs,
    /// Score with a uniform predictor instead of a model.
    #[arg(long)]
    uniform: bool,
    #[arg(long, value_enum, default_value_t = ReportKind::Kv)]
    report: ReportKind,
    #[arg(long, default_value_t = CONTEXT_LEN)]
    context_len: usize,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(default_value = "-")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = CodecArg::Arrival)]
    codec: CodecArg,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long)]
    model: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(Error::Io(e))
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command line with process stdio.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(args, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the command line, writing results to `out` and diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config_file(args) {
        Ok(a) => a,
        Err(msg) => {
            let _ = writeln!(err, "error: {msg}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let outcome = match cli.jobs {
        Some(0) => Err(Failure::Usage("--jobs must be at least 1".into())),
        // serving streams responses, so it bypasses the buffered pool path
        Some(_) if matches!(cli.command, Cmd::ServePredictor(_)) => dispatch(cli.command, out, err),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => {
                let (mut o, mut e) = (Vec::new(), Vec::new());
                let result = pool.install(|| dispatch(cli.command, &mut o, &mut e));
                let _ = out.write_all(&o);
                let _ = err.write_all(&e);
                result
            }
            Err(e) => Err(Failure::Usage(e.to_string())),
        },
        None => dispatch(cli.command, out, err),
    };
    let _ = out.flush();
    match outcome {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

/// Splices `key=value` lines from `--config FILE` into the argument list as
/// `--key value`, after the subcommand and before any explicit flags so
/// that explicit flags win. Unknown keys are rejected.
fn apply_config_file(args: Vec<OsString>) -> std::result::Result<Vec<OsString>, String> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].to_string_lossy().strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(args.get(pos + 1).ok_or("--config needs a file")?),
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;

    let command = Cli::command();
    let sub_pos = args
        .iter()
        .enumerate()
        .skip(1)
        .find(|(_, a)| command.find_subcommand(a.to_string_lossy().as_ref()).is_some())
        .map(|(i, _)| i)
        .ok_or("--config needs a subcommand")?;
    let sub = command
        .find_subcommand(args[sub_pos].to_string_lossy().as_ref())
        .expect("found above");
    let known: HashSet<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|l| l != "config" && l != "help")
        .collect();
    let flags: HashSet<String> = sub
        .get_arguments()
        .filter(|a| !a.get_action().takes_values())
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();

    let mut extra: Vec<OsString> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected key=value", path.display(), i + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if !known.contains(&key) {
            return Err(format!("{}:{}: unknown key {key:?}", path.display(), i + 1));
        }
        let given = args.iter().any(|a| {
            let a = a.to_string_lossy();
            a == format!("--{key}") || a.starts_with(&format!("--{key}="))
        });
        if given {
            continue;
        }
        if flags.contains(&key) {
            match value {
                "true" | "1" | "yes" => extra.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                _ => return Err(format!("{}:{}: {key} expects true or false", path.display(), i + 1)),
            }
        } else {
            extra.push(format!("--{key}").into());
            extra.push(value.into());
        }
    }
    let mut out = args;
    out.splice(sub_pos + 1..sub_pos + 1, extra);
    Ok(out)
}

fn resolve_seed(flag: Option<u64>) -> std::result::Result<u64, Failure> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV}={v:?} is not an integer"))),
        Err(_) => Ok(0),
    }
}

fn read_input(path: &Path) -> Result<String, Error> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Error::at_path(path, e))
    }
}

fn write_output(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), Error> {
    match path {
        Some(p) if p != Path::new("-") => fs::write(p, bytes).map_err(|e| Error::at_path(p, e)),
        _ => Ok(out.write_all(bytes)?),
    }
}

fn dispatch(cmd: Cmd, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match cmd {
        Cmd::Ingest(a) => ingest(a, out),
        Cmd::Tokenize(a) => tokenize(a, out),
        Cmd::Detokenize(a) => detokenize(a, out),
        Cmd::Densify(a) => densify_cmd(a, out),
        Cmd::Interleave(a) => interleave_cmd(a, out),
        Cmd::Augment(a) => augment(a, out, err),
        Cmd::TrainNgram(a) => train(a, out),
        Cmd::Sample(a) => sample(a, out, err),
        Cmd::Evaluate(a) => evaluate(a, out, err),
        Cmd::Stats(a) => stats(a, out),
        Cmd::Golden => golden(out),
        Cmd::ServePredictor(a) => serve(a, out),
    }
}

fn ingest(a: IngestArgs, out: &mut dyn Write) -> Outcome {
    let filters = CorpusFilters {
        min_events: a.min_events,
        min_seconds: a.min_seconds,
        max_seconds: a.max_seconds,
        max_parts: a.max_parts,
    };
    let corpus = preprocess_corpus(&a.input, &filters)?;
    write_corpus(&corpus, &a.out)?;
    let m = &corpus.manifest;
    writeln!(out, "files={}", m.entries.len())?;
    writeln!(out, "accepted={}", m.accepted().count())?;
    for reason in RejectReason::ALL {
        writeln!(out, "rejected.{reason}={}", m.reject_count(reason))?;
    }
    Ok(())
}

fn tokenize(a: TokenizeArgs, out: &mut dyn Write) -> Outcome {
    let codec = Codec::from(a.codec);
    let sequences = parse_event_text(&read_input(&a.input)?)?;
    let mut lines: Vec<Vec<Token>> = Vec::new();
    for seq in &sequences {
        let line = match codec {
            Codec::Arrival => {
                let mut t = vec![ControlCode::for_sequence(seq).token(), arrival::SEP, arrival::SEP, arrival::SEP];
                t.extend(encode_arrival(seq)?.tokens());
                t
            }
            Codec::Interarrival => {
                if seq.has_controls() {
                    return Err(Error::Unsupported("interarrival tokens cannot carry controls".into()).into());
                }
                let mut t = vec![interarrival::SEP];
                t.extend(encode_interarrival(&seq.plain_events())?.tokens());
                t
            }
        };
        lines.push(line);
    }
    let text = write_token_file(codec, lines.iter().map(Vec::as_slice));
    write_output(a.output.as_deref(), text.as_bytes(), out)?;
    Ok(())
}

fn detokenize(a: DetokenizeArgs, out: &mut dyn Write) -> Outcome {
    let (codec, lines) = read_token_file(&read_input(&a.input)?)?;
    if let Some(want) = a.codec.map(Codec::from) {
        if want != codec {
            return Err(Error::Config(format!("file holds {codec} tokens, not {want}")).into());
        }
    }
    let text = match codec {
        Codec::Arrival => {
            let mut seqs = Vec::new();
            for line in &lines {
                seqs.extend(decode_arrival(line)?);
            }
            write_event_text(&seqs)
        }
        Codec::Interarrival => {
            let mut seqs = Vec::new();
            for line in &lines {
                seqs.extend(decode_interarrival(line)?);
            }
            write_event_sequences(&seqs)
        }
    };
    write_output(a.output.as_deref(), text.as_bytes(), out)?;
    Ok(())
}

fn densify_cmd(a: DensifyArgs, out: &mut dyn Write) -> Outcome {
    if !(a.target_density > 0.0) {
        return Err(Failure::Usage("--target-density must be positive".into()));
    }
    let target = seconds_as_ticks(a.target_density).max(1);
    let seqs = parse_event_sequences(&read_input(&a.input)?)?;
    let dense: Vec<EventSequence> = seqs.iter().map(|s| densify(s, target)).collect();
    write_output(a.output.as_deref(), write_event_sequences(&dense).as_bytes(), out)?;
    Ok(())
}

fn interleave_cmd(a: InterleaveArgs, out: &mut dyn Write) -> Outcome {
    let config = AnticipationConfig::new(a.delta, 1.0).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut result = Vec::new();
    for seq in parse_event_text(&read_input(&a.input)?)? {
        let plain = EventSequence::new(seq.plain_events().into_events(), OrderMode::Reject)?;
        let controls = ControlSequence::new(seq.controls(), OrderMode::Sort)?;
        result.push(interleave(&plain, &controls, config.delta_ticks()));
    }
    write_output(a.output.as_deref(), write_event_text(&result).as_bytes(), out)?;
    Ok(())
}

fn augment(a: AugmentArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let seed = resolve_seed(a.seed)?;
    if a.shard_size == 0 {
        return Err(Failure::Usage("--shard-size must be at least 1".into()));
    }
    let mut policy = AugmentationPolicy {
        factor: a.factor,
        span_rate: a.span_rate,
        span_length: a.delta,
        anticipation: AnticipationConfig::new(a.delta, a.target_density).map_err(|e| Failure::Usage(e.to_string()))?,
        ..AugmentationPolicy::default()
    };
    policy.pack.context_len = a.context_len;
    policy.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let dataset = parse_event_sequences(&read_input(&a.input)?)?;
    let result = augment_corpus(&dataset, &policy, seed)?;

    fs::create_dir_all(&a.out).map_err(|e| Error::at_path(&a.out, e))?;
    let mut failures = 0;
    let examples = &result.packed.examples;
    for (shard, start) in (0..examples.len()).step_by(a.shard_size).enumerate() {
        let end = (start + a.shard_size).min(examples.len());
        let tokens = write_token_file(Codec::Arrival, examples[start..end].iter().map(|e| e.tokens()));
        let labels: String = result.labels[start..end].iter().map(|p| format!("{p}\n")).collect();
        for (ext, body) in [("tokens", tokens), ("labels", labels)] {
            let path = a.out.join(format!("shard-{shard:05}.{ext}"));
            if let Err(e) = fs::write(&path, body) {
                failures += 1;
                writeln!(err, "warning: {}: {e}", path.display())?;
            }
        }
    }
    let s = &result.stats;
    writeln!(out, "sequences={}", dataset.len())?;
    writeln!(out, "copies={}", result.copies.len())?;
    writeln!(out, "examples={}", examples.len())?;
    writeln!(out, "discarded_windows={}", result.packed.discarded)?;
    writeln!(out, "base_tokens={}", s.base_tokens)?;
    writeln!(out, "augmented_tokens={}", s.augmented_tokens)?;
    writeln!(out, "rest_tokens={}", s.rest_tokens)?;
    writeln!(out, "shard_failures={failures}")?;
    if failures > 0 {
        return Err(Error::Config(format!("{failures} shard file(s) could not be written")).into());
    }
    Ok(())
}

fn train(a: TrainArgs, out: &mut dyn Write) -> Outcome {
    let mut codec = None;
    let mut corpus: Vec<Vec<Token>> = Vec::new();
    for path in &a.inputs {
        let (c, lines) = read_token_file(&read_input(path)?)?;
        if codec.is_some_and(|k| k != c) {
            return Err(Error::Config(format!("{} mixes codecs", path.display())).into());
        }
        codec = Some(c);
        corpus.extend(lines);
    }
    let codec = codec.expect("at least one input");
    let model = train_ngram(corpus.iter().map(Vec::as_slice), a.order, a.alpha, codec.vocab_size())?;
    model.save(&a.out)?;
    writeln!(out, "sequences={}", corpus.len())?;
    writeln!(out, "tokens={}", corpus.iter().map(Vec::len).sum::<usize>())?;
    writeln!(out, "contexts={:?}", model.context_counts())?;
    Ok(())
}

fn load_predictor(a: &PredictorArgs) -> std::result::Result<Box<dyn Predictor>, Failure> {
    match (&a.model, &a.predictor_cmd) {
        (Some(path), _) => Ok(Box::new(NGramModel::load(path)?)),
        (None, Some(cmd)) => {
            let mut process = Process::new("sh");
            process.arg("-c").arg(cmd);
            let p = ExternalPredictor::spawn(process, arrival::VOCAB_SIZE, Duration::from_millis(a.timeout_ms))?;
            Ok(Box::new(p))
        }
        (None, None) => Err(Failure::Usage("one of --model or --predictor-cmd is required".into())),
    }
}

fn sample(a: SampleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let config = SamplerConfig {
        delta: a.delta,
        top_p: a.top_p,
        max_tokens: a.max_tokens,
        grammar_mask: !a.no_grammar_mask,
        seed: resolve_seed(a.seed)?,
        context_len: CONTEXT_LEN,
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if a.out == OutputKind::Midi && a.output.is_none() {
        return Err(Failure::Usage("--out midi needs --output FILE".into()));
    }
    let controls = match &a.controls {
        Some(path) => {
            let mut all = Vec::new();
            for seq in parse_event_text(&read_input(path)?)? {
                all.extend(seq.items().iter().filter(|i| !i.event.is_rest()).map(|i| i.event));
            }
            ControlSequence::new(all, OrderMode::Sort)?
        }
        None => ControlSequence::empty(),
    };
    let mut predictor = load_predictor(&a.predictor)?;
    let generation = match a.mode {
        SampleMode::Anticipatory => {
            let code = if controls.is_empty() { ControlCode::Ar } else { ControlCode::Aar };
            generate_anticipatory(&mut *predictor, &controls, code, &config)?
        }
        SampleMode::Baseline => generate_autoregressive_infill(&mut *predictor, &controls, &config)?,
    };
    if generation.truncated {
        writeln!(err, "warning: token budget reached before SEP; output truncated")?;
    }
    let bytes = match a.out {
        OutputKind::Events => write_event_text([&generation.sequence]).into_bytes(),
        OutputKind::Midi => {
            let events: Vec<_> = generation
                .sequence
                .items()
                .iter()
                .filter(|i| !i.event.is_rest())
                .map(|i| i.event)
                .collect();
            write_midi(&EventSequence::new(events, OrderMode::Sort)?.canonicalized())?
        }
    };
    write_output(a.output.as_deref(), &bytes, out)?;
    Ok(())
}

fn evaluate(a: EvaluateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let corpus = parse_event_sequences(&read_input(&a.input)?)?;
    let mut predictor: Box<dyn Predictor> = if a.uniform {
        Box::new(UniformPredictor {
            vocab_size: arrival::VOCAB_SIZE,
        })
    } else {
        load_predictor(&a.predictor)?
    };
    let eval = evaluate_events(&mut *predictor, &corpus, a.context_len)?;
    if eval.excluded > 0 {
        writeln!(err, "warning: {} sequence(s) excluded (window span of 100 s or more)", eval.excluded)?;
    }
    let report = eval.report()?;
    let text = match a.report {
        ReportKind::Kv => report.to_key_value(),
        ReportKind::Tsv => report.to_tsv(),
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn stats(a: StatsArgs, out: &mut dyn Write) -> Outcome {
    let corpus = parse_event_sequences(&read_input(&a.input)?)?;
    let (lengths, rates) = corpus_histograms(&corpus, a.codec.into(), HistogramConfig::default())?;
    out.write_all(lengths.to_tsv().as_bytes())?;
    writeln!(out)?;
    out.write_all(rates.to_tsv().as_bytes())?;
    Ok(())
}

fn golden(out: &mut dyn Write) -> Outcome {
    let checks = run_golden();
    let mut failed = 0;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        writeln!(out, "{status} {} ({})", c.name, c.detail)?;
        failed += usize::from(!c.passed);
    }
    writeln!(out, "{} passed, {failed} failed", checks.len() - failed)?;
    if failed > 0 {
        return Err(Error::Metric(format!("{failed} golden check(s) failed")).into());
    }
    Ok(())
}

fn serve(a: ServeArgs, out: &mut dyn Write) -> Outcome {
    let mut model = NGramModel::load(&a.model)?;
    serve_predictor(&mut model, BufReader::new(io::stdin()), out)?;
    Ok(())
}
