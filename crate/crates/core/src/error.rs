use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the triage library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {malformed} of {total} records malformed (first: {first})")]
    MostlyMalformed {
        path: PathBuf,
        malformed: usize,
        total: usize,
        first: String,
    },

    #[error("{context}, line {line}: {message}")]
    Parse {
        context: String,
        line: usize,
        message: String,
    },

    #[error("embedding dimension mismatch on line {line}: expected {expected}, found {found}")]
    Dimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cosine similarity undefined for a zero vector")]
    ZeroVector,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("non-finite loss at epoch {epoch} (learning rate {learning_rate}); lower the learning rate")]
    NonFiniteLoss { epoch: usize, learning_rate: f64 },

    #[error("undated messages cannot be profiled: {0:?}")]
    Undated(Vec<String>),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("missing category {0}")]
    MissingCategory(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
