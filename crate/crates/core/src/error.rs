use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown label at line {line}: {label:?}")]
    UnknownLabel { line: usize, label: String },

    #[error("malformed record at line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("translation to/from {language} failed: {message}")]
    Translation { language: String, message: String },

    #[error("augmentation stopped after {rounds} rounds with a deficit of {deficit}")]
    RoundsExhausted { rounds: usize, deficit: usize },

    #[error("vocabulary size {requested} too small, need more than {minimum}")]
    VocabTooSmall { requested: usize, minimum: usize },

    #[error("token id {id} out of range for vocabulary of {size}")]
    TokenOutOfRange { id: u32, size: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite gradient in tensor {0}")]
    NonFiniteGradient(String),

    #[error("model is not fitted")]
    NotFitted,

    #[error("invalid probabilities from model: {0}")]
    InvalidProbabilities(String),

    #[error("subword continuation {0:?} has no preceding word")]
    OrphanContinuation(String),

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
