// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;

/// Errors produced anywhere in the probing pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("{path}: no records")]
    NoRecords { path: PathBuf },

    #[error("{path}:{line}: unknown linguistics_term {term:?}")]
    UnknownPhenomenon {
        path: PathBuf,
        line: usize,
        term: String,
    },

    #[error("duplicate pair_uid {0:?}")]
    DuplicatePair(String),

    #[error("invalid metadata record for {pair_uid}: {reason}")]
    InvalidMetadata { pair_uid: String, reason: String },

    #[error("word vectors: {0}")]
    WordVectors(String),

    #[error("model: {0}")]
    Model(String),

    #[error("tokenizer: {0}")]
    Tokenizer(String),

    #[error("sequence of {len} tokens exceeds the model's {max} positions")]
    SequenceTooLong { len: usize, max: usize },

    #[error("non-finite activation in {0}")]
    NonFinite(String),

    #[error("{what} index {index} out of range (0..{bound})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("sequence length {len} exceeds pad_to {pad_to}")]
    PadTooSmall { len: usize, pad_to: usize },

    #[error("archive: {0}")]
    Archive(String),

    #[error("archive truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: u64, actual: u64 },

    #[error("probe: {0}")]
    Probe(String),

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("analysis: {0}")]
    Analysis(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
