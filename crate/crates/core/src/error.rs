use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("insufficient data: need at least {needed} points, have {have}")]
    InsufficientData { needed: usize, have: usize },
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),
    #[error("objective returned non-finite value {value} at iteration {iteration}")]
    NonFiniteObjective { iteration: usize, value: f64 },
}
