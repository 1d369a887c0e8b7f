use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("curve does not span the transition: {0}")]
    InsufficientSpan(String),

    #[error(
        "logistic fit failed to converge after {iterations} iterations (rss = {rss:e}): {reason}"
    )]
    FitFailure {
        iterations: usize,
        rss: f64,
        reason: String,
    },

    #[error("no overlap between curve z={z} and the reference after rescaling with beta={beta}")]
    NoOverlap { z: u32, beta: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(
        "metrics infeasible: accepted {accepted} of {attempts} realizations \
         (acceptance rate {rate:.4}), needed {requested}"
    )]
    Infeasible {
        accepted: usize,
        attempts: usize,
        requested: usize,
        rate: f64,
    },

    #[error("merge conflict: {0}")]
    MergeConflict(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}
