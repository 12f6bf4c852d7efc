use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the estimation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("insufficient sample: need at least {needed} points, have {have}")]
    InsufficientSample { needed: usize, have: usize },

    #[error("no valid local estimates ({invalid} invalid)")]
    NoValidEstimates { invalid: usize },

    #[error("no root of the likelihood equation in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("multiple sign changes of the likelihood derivative in [{lo}, {hi}]: {count}")]
    MultipleRoots { lo: f64, hi: f64, count: usize },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("correction model is not monotone on [{lo}, {hi}]")]
    NonMonotoneModel { lo: f64, hi: f64 },

    #[error("channel {channel} has zero variance")]
    ZeroVariance { channel: usize },

    #[error("insufficient length: need {needed} samples, have {have}")]
    InsufficientLength { needed: usize, have: usize },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by caller input rather than data content.
    pub fn is_usage(&self) -> bool {
        matches!(self, Error::InvalidArgument(_) | Error::DimensionMismatch { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
