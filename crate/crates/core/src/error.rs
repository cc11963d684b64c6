use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cannot parse {0}")]
    Parse(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature radius {radius} too small (tail mass estimate {tail:e})")]
    TruncatedSupport { radius: f64, tail: f64 },

    #[error("quadrature did not converge: {0}")]
    NoConvergence(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid stabiliser generators: {0}")]
    InvalidGenerators(String),

    #[error("sample budget {n} exceeds 2^31; use a larger epsilon")]
    BudgetOverflow { n: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
