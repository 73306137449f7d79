//! Linear solvers for the symmetric systems of every integrator.

mod amg;
mod cholesky;
mod pcg;
mod precond;

use std::fmt;
use std::str::FromStr;

pub use amg::AmgPreconditioner;
pub use cholesky::{direct_solve_spd, EnvelopeCholesky};
pub use pcg::{cg_iterate, pcg_solve, pcg_with, CgRun, SolveReport};
pub use precond::{IncompleteCholesky, Jacobi, Preconditioner};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreconditionerKind {
    None,
    Jacobi,
    /// Zero fill-in incomplete Cholesky.
    IncompleteCholesky,
    /// Smoothed-aggregation algebraic multigrid V-cycle.
    Multigrid,
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PreconditionerKind::None => "none",
            PreconditionerKind::Jacobi => "jacobi",
            PreconditionerKind::IncompleteCholesky => "ichol",
            PreconditionerKind::Multigrid => "amg",
        })
    }
}

impl FromStr for PreconditionerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "jacobi" => Ok(Self::Jacobi),
            "ichol" | "ic0" | "incomplete-factorization" => Ok(Self::IncompleteCholesky),
            "amg" | "multigrid" => Ok(Self::Multigrid),
            other => Err(Error::InvalidParameter(format!("unknown preconditioner `{other}`"))),
        }
    }
}

/// Stopping rule and preconditioner of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Relative residual `‖Ax − b‖ / ‖b‖` at which iterations stop.
    pub rel_tolerance: f64,
    pub max_iterations: usize,
    pub preconditioner: PreconditionerKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rel_tolerance: 1e-4,
            max_iterations: 10_000,
            preconditioner: PreconditionerKind::Multigrid,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "solver tolerance must be positive, got {}",
                self.rel_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.rel_tolerance = tol;
        self
    }

    pub fn with_preconditioner(mut self, kind: PreconditionerKind) -> Self {
        self.preconditioner = kind;
        self
    }
}

/// Builds the preconditioner selected by `kind` for `a`.
pub fn build_preconditioner(kind: PreconditionerKind, a: &SparseMatrix) -> Box<dyn Preconditioner + Send + Sync> {
    match kind {
        PreconditionerKind::None => Box::new(precond::Identity),
        PreconditionerKind::Jacobi => Box::new(Jacobi::new(a)),
        PreconditionerKind::IncompleteCholesky => Box::new(IncompleteCholesky::new(a)),
        PreconditionerKind::Multigrid => Box::new(AmgPreconditioner::new(a)),
    }
}
