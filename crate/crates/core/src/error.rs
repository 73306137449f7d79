use std::io;

use thiserror::Error;

/// Errors produced by the integration library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty domain")]
    EmptyDomain,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("negative regularization weight {value} at linear index {index}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("matrix not positive definite (pivot {pivot:e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    /// The iterative solver ran out of iterations. The best iterate seen is kept
    /// so that callers may still use it.
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    #[error("step-size backtracking failed at iteration {iteration} (alpha1 = {alpha1:e})")]
    BacktrackingFailed {
        iteration: usize,
        alpha1: f64,
        last_stable: Vec<f64>,
    },

    #[error("unknown surface kind `{0}`")]
    UnknownSurface(String),

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, e.g. for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Io,
    Config,
    Solver,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Io(_) | Error::Format(_) => ErrorClass::Io,
            Error::EmptyDomain
            | Error::DimensionMismatch(_)
            | Error::NegativeWeight { .. }
            | Error::InvalidParameter(_)
            | Error::UnknownSurface(_) => ErrorClass::Config,
            Error::SingularSystem(_)
            | Error::NotPositiveDefinite { .. }
            | Error::NotConverged { .. }
            | Error::BacktrackingFailed { .. } => ErrorClass::Solver,
        }
    }
}
