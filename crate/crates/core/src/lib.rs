//! Anticipatory music modeling: event streams, MIDI I/O, token codecs,
//! control interleaving, augmentation, predictors, samplers and metrics.

pub mod anticipation;
pub mod augment;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod event;
pub mod golden;
pub mod metrics;
pub mod midi;
pub mod predictor;
pub mod sampler;
pub mod stats;
pub mod synthetic;
pub mod text;
pub mod tokenize;

pub use anticipation::{
    densify, interleave, split_and_sort, AnticipationConfig, InterleavedSequence, Item, Tag,
};
pub use error::{Error, Result};
pub use event::{ControlSequence, Event, EventSequence, Note, NoteCode, OrderMode};
pub use tokenize::{decode_arrival, encode_arrival, Codec, Token};
