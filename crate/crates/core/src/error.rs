use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, GonError>;

/// Coarse failure classes surfaced by the CLI as machine-parseable tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Data,
    Numeric,
    Io,
}

impl ErrorCategory {
    pub fn tag(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config-error",
            ErrorCategory::Data => "data-error",
            ErrorCategory::Numeric => "numeric-error",
            ErrorCategory::Io => "io-error",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Data => 3,
            ErrorCategory::Numeric => 4,
            ErrorCategory::Io => 5,
        }
    }
}

#[derive(Debug, Error)]
pub enum GonError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid data: {0}")]
    Data(String),

    #[error("parse error at row {row}, column {col}: {msg}")]
    Parse { row: usize, col: usize, msg: String },

    #[error("too few peaks over the initial threshold ({found}, need at least {needed}); try a larger init level")]
    TooFewPeaks { found: usize, needed: usize },

    #[error("degenerate scores: {0}")]
    Degenerate(String),

    #[error("metrics undefined: {0}")]
    UndefinedMetrics(String),

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl GonError {
    pub fn config(msg: impl Into<String>) -> Self {
        GonError::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        GonError::Data(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GonError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            GonError::Config(_) | GonError::DimensionMismatch { .. } => ErrorCategory::Config,
            GonError::Data(_)
            | GonError::Parse { .. }
            | GonError::TooFewPeaks { .. }
            | GonError::Degenerate(_)
            | GonError::UndefinedMetrics(_)
            | GonError::Checkpoint(_) => ErrorCategory::Data,
            GonError::NonFinite(_) => ErrorCategory::Numeric,
            GonError::Io { .. } => ErrorCategory::Io,
        }
    }
}
