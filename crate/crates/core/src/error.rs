use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("parameter regime violated: {0}")]
    Regime(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("grid length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("increment lag {lag} out of range for grid of {n} cells")]
    LagOutOfRange { lag: usize, n: usize },

    #[error("GMC exponent overflow: gamma * max(X) = {0:.3} exceeds 700")]
    GmcOverflow(f64),

    #[error("non-finite integrand value {value} at x = {x}")]
    NonFiniteIntegrand { x: f64, value: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("estimator error: {0}")]
    Estimator(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }
}
