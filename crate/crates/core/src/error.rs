use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("column {index} has value {value}, which does not fit in {m} rows")]
    InvalidColumn { index: usize, value: u64, m: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} requires M to be a power of two, got M = {m}")]
    NotPowerOfTwo { what: &'static str, m: usize },

    #[error("{what}: N = {n} is not divisible by {divisor}")]
    Divisibility {
        what: &'static str,
        n: usize,
        divisor: usize,
    },

    #[error("bit group {group} has no workers")]
    EmptyGroup { group: usize },

    #[error("exact enumeration refused: {detail}; use Monte Carlo (simulate) instead")]
    EnumerationCap { detail: String },

    #[error("infeasible covariance {rho}: achievable range is [{min}, {max}]")]
    InfeasibleCovariance { rho: f64, min: f64, max: f64 },

    #[error("{path}:{line}: {msg}")]
    Csv {
        path: PathBuf,
        line: u64,
        msg: String,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// Whether the error stems from bad user input rather than the environment.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}
