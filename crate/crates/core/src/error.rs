use thiserror::Error;

use crate::sqrt_minvol::SolveTrace;

/// Errors raised by the factorization kernels and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Cholesky hit a pivot that is not strictly positive.
    #[error("matrix is not positive definite (pivot {pivot:e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("degenerate denominator in lambda heuristic: log det = {0:e}")]
    DegenerateDenominator(f64),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// A solver produced a non-finite objective. The trace up to the fault is kept
    /// so callers can flush it.
    #[error("numerical fault: {message}")]
    NumericalFault {
        message: String,
        trace: Option<Box<SolveTrace>>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
