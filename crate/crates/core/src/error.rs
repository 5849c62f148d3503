//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A malformed line in a check-in file. Line numbers are 1-based.
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    /// An argument outside its documented range.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The corpus is empty or contains no usable context pairs.
    #[error("corpus has no trainable context pairs: {0}")]
    EmptyCorpus(String),

    /// Not enough data to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A token that is not in the vocabulary.
    #[error("unknown token: {0}")]
    UnknownToken(String),

    /// An unseen token none of whose n-grams are known.
    #[error("unrepresentable token: {0}")]
    Unrepresentable(String),

    /// Every query session of a user failed to produce a vector.
    #[error("no representable query session for user {0}")]
    ColdUser(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A model file that cannot be decoded.
    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
