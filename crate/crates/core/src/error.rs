//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

/// Coarse error category, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad parameters or configuration supplied by the caller.
    Validation,
    /// Problems with input data files (I/O, schema, inconsistent content).
    Data,
    /// Everything else.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what} in {path} (row {row}): {detail}")]
    MalformedFile {
        what: &'static str,
        path: PathBuf,
        row: usize,
        detail: String,
    },

    #[error("unknown electrode label '{label}'")]
    UnknownLabel { label: String },

    #[error("inconsistent channels: {detail}")]
    InconsistentChannels { detail: String },

    #[error("non-positive sample rate: {value}")]
    NonPositiveSampleRate { value: f64 },

    #[error("timestamps not strictly increasing at row {row}")]
    NonMonotoneTimestamps { row: usize },

    #[error("invalid parameter {name}: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    #[error("signal too short: need at least {need} samples, got {got}")]
    SignalTooShort { need: usize, got: usize },

    #[error("correlation undefined: {detail}")]
    UndefinedCorrelation { detail: String },

    #[error("degenerate input: {detail}")]
    Degenerate { detail: String },

    #[error("json error on {path}: {detail}")]
    Json { path: PathBuf, detail: String },
}

impl Error {
    pub fn invalid_parameter(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            detail: detail.into(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::InvalidParameter { .. } | Error::SignalTooShort { .. } => {
                ErrorCategory::Validation
            }
            Error::Io { .. }
            | Error::MalformedFile { .. }
            | Error::UnknownLabel { .. }
            | Error::InconsistentChannels { .. }
            | Error::NonPositiveSampleRate { .. }
            | Error::NonMonotoneTimestamps { .. }
            | Error::Json { .. } => ErrorCategory::Data,
            Error::UndefinedCorrelation { .. } | Error::Degenerate { .. } => {
                ErrorCategory::Internal
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
