use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("midi parse error at byte {offset}: {message}")]
    MidiParse { offset: usize, message: String },

    #[error("cannot assign {needed} instruments to midi channels (at most {available} melodic channels)")]
    ChannelCapacity { needed: usize, available: usize },

    #[error("time {value} at item {index} is outside the token range [0, {limit})")]
    TimeRange {
        index: usize,
        value: u32,
        limit: u32,
    },

    #[error("malformed token triple {index}: {message}")]
    TokenStructure { index: usize, message: String },

    #[error("token {token} at position {index} is outside the {codec} vocabulary")]
    TokenRange {
        index: usize,
        token: u32,
        codec: &'static str,
    },

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("interarrival pairing error at token {index}: {message}")]
    Pairing { index: usize, message: String },

    #[error("training error: {0}")]
    Training(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("predictor error: {0}")]
    Predictor(String),

    #[error("predictor timed out after {0:?}")]
    PredictorTimeout(std::time::Duration),

    #[error("zero-probability target token {token} at sequence {sequence}, position {position}")]
    InfiniteLoss {
        sequence: usize,
        position: usize,
        token: u32,
    },

    #[error("{0}")]
    Metric(String),

    #[error("parse error on line {line}: {message}")]
    TextFormat { line: usize, message: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    PathIo {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn at_path(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::PathIo {
            path: path.into(),
            source,
        }
    }
}
