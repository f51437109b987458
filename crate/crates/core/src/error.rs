use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    ShapeMismatch { op: &'static str, expected: String, actual: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),

    #[error("band-mask search domain exhausted: every nonzero mask has been observed")]
    DomainExhausted,

    #[error("malformed {kind} file {path}: {reason}")]
    Format { kind: &'static str, path: PathBuf, reason: String },

    #[error("payload length mismatch in {path}: expected {expected} bytes, found {actual}")]
    PayloadLength { path: PathBuf, expected: u64, actual: u64 },

    #[error("{failed} of {planned} planned objective evaluations failed")]
    TooManyFailures { failed: usize, planned: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::ShapeMismatch { op, expected: expected.to_string(), actual: actual.to_string() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ShapeMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::Config(_)
                | Error::Format { .. }
                | Error::PayloadLength { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
