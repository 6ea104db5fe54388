//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, weight computation, estimation and
/// simulation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("step index {t} out of range 1..={len}")]
    StepOutOfRange { t: usize, len: usize },

    #[error("invalid support: both target and behavior propensities are zero at prefix t={t}")]
    InvalidSupport { t: usize },

    #[error("support violation: policy assigns zero propensity on logged step (user {user_id}, t={t})")]
    SupportViolation { user_id: String, t: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("confidence interval unavailable: variance estimate undefined (need >= 2 users per contributing arm)")]
    IntervalUnavailable,

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("estimator {0} is a named baseline slot without a reference implementation")]
    Unimplemented(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
