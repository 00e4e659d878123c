use thiserror::Error;

/// Errors raised by the model, solvers, and mechanism constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} lies outside the support [{lo}, {hi}]")]
    OutOfSupport { value: f64, lo: f64, hi: f64 },

    #[error("reference event probability {0} is degenerate (must lie strictly inside (0, 1))")]
    DegenerateEvent(f64),

    #[error("cdf is not monotone: F({left}) = {f_left} > F({right}) = {f_right}")]
    NonMonotoneCdf {
        left: f64,
        f_left: f64,
        right: f64,
        f_right: f64,
    },

    #[error("infeasible interim problem: {0}")]
    Infeasible(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("regularity violation: {0}")]
    Regularity(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
