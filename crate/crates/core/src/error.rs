use thiserror::Error;

use crate::expr::EvalError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum Error {
    #[error("expression evaluation failed at {point:?}: {source}")]
    Eval { point: [f64; 3], source: EvalError },
    #[error("{what} is not positive definite at {point:?}")]
    NotPositiveDefinite { what: &'static str, point: [f64; 3] },
    #[error("{what} is degenerate at {point:?} (value {value:e})")]
    Degenerate { what: &'static str, point: [f64; 3], value: f64 },
    #[error("Killing field is not timelike at {point:?}: N^2 - N_i N^i = {margin:e}")]
    NotTimelike { point: [f64; 3], margin: f64 },
    #[error("{what} must be positive, got {value:e} at {point:?}")]
    NonPositive { what: &'static str, point: [f64; 3], value: f64 },
    #[error("shift bound |N|^2 < N^2 violated at {point:?}: conformal shift norm {norm}")]
    ShiftBound { point: [f64; 3], norm: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { what: &'static str, iterations: usize, residual: f64 },
}

impl Error {
    /// Chart point the failure is attached to, if any.
    pub fn location(&self) -> Option<[f64; 3]> {
        match self {
            Error::Eval { point, .. }
            | Error::NotPositiveDefinite { point, .. }
            | Error::Degenerate { point, .. }
            | Error::NotTimelike { point, .. }
            | Error::NonPositive { point, .. }
            | Error::ShiftBound { point, .. } => Some(*point),
            Error::InvalidInput(_) | Error::NoConvergence { .. } => None,
        }
    }
}
