//! Total-variation-like integration by ADMM.
//!
//! Each of the four discretisations `∇^{UV}` gets an auxiliary residual
//! `r^{UV} ≈ ∇^{UV}z − g` and a scaled dual `b^{UV}`. One iteration is a
//! linear solve in `z` with the fixed matrix
//! `A_TV = (α/8)Σ[D_u^Uᵀ D_u^U + D_v^Vᵀ D_v^V] + Λ²`, a shrinkage of every
//! `r^{UV}` with threshold `4/α`, and a dual ascent step. The fixed point
//! minimises `Σ_{UV} Σ_{Ω^{UV}} ‖∇^{UV}z − g‖ + Σ λ (z − z⁰)²`.

use log::{debug, warn};

use crate::domain::DirectionPair;
use crate::error::{Error, Result};
use crate::fields::{DepthMap, GradientField, PriorField};
use crate::linalg::{build_preconditioner, pcg_with, Preconditioner, SolverConfig};
use crate::operators::{Discretization, SparseOperatorSet};
use crate::quadratic::{check_isolated, fix_free_components, integrate_quadratic};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvConfig {
    pub alpha: f64,
    pub iterations: usize,
    /// Inner solver for the `z` update. The tolerance is much tighter than
    /// for a one-off solve because the ADMM fixed point inherits its error.
    pub solver: SolverConfig,
    /// Early exit once the summed primal residual drops below this times `|Ω|`.
    pub exit_residual: f64,
}

impl Default for TvConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            iterations: 1000,
            solver: SolverConfig::default().with_tolerance(1e-10),
            exit_residual: 1e-6,
        }
    }
}

impl TvConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.exit_residual >= 0.0) {
            return Err(Error::InvalidParameter("exit residual must be non-negative".into()));
        }
        self.solver.validate()
    }
}

/// A field of 2-vectors on one `Ω^{UV}`, stored as two full-length vectors
/// that stay zero off the sub-domain.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl VectorField {
    fn zeros(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmState {
    pub z: DepthMap,
    /// Indexed by [`DirectionPair::slot`].
    pub r: [VectorField; 4],
    pub b: [VectorField; 4],
    pub alpha: f64,
    pub iteration: usize,
}

impl AdmmState {
    pub fn new(z: DepthMap, alpha: f64) -> Self {
        let n = z.len();
        Self {
            z,
            r: std::array::from_fn(|_| VectorField::zeros(n)),
            b: std::array::from_fn(|_| VectorField::zeros(n)),
            alpha,
            iteration: 0,
        }
    }
}

/// `A_TV` for a given `α`.
pub fn build_tv_matrix(ops: &SparseOperatorSet, prior: &PriorField, alpha: f64) -> Result<SparseMatrix> {
    let n = ops.len();
    let w = vec![alpha / 8.0; n];
    let mut a = SparseMatrix::zeros(n, n);
    for pair in DirectionPair::ALL {
        let (du, dv) = ops.pair(pair);
        a = a.add(&du.weighted_gram(&w)).add(&dv.weighted_gram(&w));
    }
    a.add_diagonal(&prior.lambda).into_symmetric()
}

fn tv_rhs(ops: &SparseOperatorSet, g: &GradientField, prior: &PriorField, state: &AdmmState) -> Vec<f64> {
    let n = ops.len();
    let c = state.alpha / 8.0;
    let mut rhs: Vec<f64> = (0..n).map(|i| prior.lambda[i] * prior.z0[i]).collect();
    let mut tu = vec![0.0; n];
    let mut tv = vec![0.0; n];
    for pair in DirectionPair::ALL {
        let (du, dv) = ops.pair(pair);
        let (r, b) = (&state.r[pair.slot()], &state.b[pair.slot()]);
        for i in 0..n {
            tu[i] = g.p[i] + r.u[i] - b.u[i];
            tv[i] = g.q[i] + r.v[i] - b.v[i];
        }
        // rows off Ω^{UV} are empty in du/dv, so stray values there never enter
        let su = du.transpose_matvec(&tu);
        let sv = dv.transpose_matvec(&tv);
        for i in 0..n {
            rhs[i] += c * (su[i] + sv[i]);
        }
    }
    rhs
}

/// Reusable factorisation-free solver for `A_TV z = b`.
struct ZSolver {
    a: SparseMatrix,
    m: Box<dyn Preconditioner + Send + Sync>,
    cfg: SolverConfig,
}

impl ZSolver {
    fn new(ops: &SparseOperatorSet, prior: &PriorField, alpha: f64, cfg: SolverConfig) -> Result<Self> {
        let a = build_tv_matrix(ops, prior, alpha)?;
        let m = build_preconditioner(cfg.preconditioner, &a);
        Ok(Self { a, m, cfg })
    }

    fn solve(&self, rhs: &[f64], x0: &[f64]) -> Result<Vec<f64>> {
        let run = pcg_with(&self.a, rhs, x0, self.m.as_ref(), self.cfg.rel_tolerance, self.cfg.max_iterations);
        if !run.converged {
            if run.best_residual > 1e-3 {
                return Err(Error::NotConverged {
                    iterations: run.iterations,
                    residual: run.best_residual,
                    best: run.best,
                });
            }
            warn!("TV z-update stopped at residual {:e}", run.best_residual);
            return Ok(run.best);
        }
        Ok(run.x)
    }
}

/// Solves `A_TV z = b_TV` for the current auxiliaries, warm-started from `state.z`.
pub fn tv_z_update(
    state: &AdmmState,
    g: &GradientField,
    prior: &PriorField,
    ops: &SparseOperatorSet,
    cfg: &SolverConfig,
) -> Result<DepthMap> {
    let solver = ZSolver::new(ops, prior, state.alpha, *cfg)?;
    let rhs = tv_rhs(ops, g, prior, state);
    Ok(DepthMap::new(solver.solve(&rhs, &state.z.z)?))
}

/// `argmin_r (α/8)‖r − s‖² + ‖r‖ = max(‖s‖ − 4/α, 0)·s/‖s‖`.
pub fn tv_shrinkage(s: [f64; 2], alpha: f64) -> [f64; 2] {
    let norm = s[0].hypot(s[1]);
    if norm == 0.0 {
        return [0.0, 0.0];
    }
    let k = (norm - 4.0 / alpha).max(0.0) / norm;
    [k * s[0], k * s[1]]
}

/// Shrinkage and dual update for every pair and pixel; returns the summed
/// primal residual `Σ‖∇^{UV}z − g − r^{UV}‖` after the update.
fn update_auxiliaries(state: &mut AdmmState, g: &GradientField, ops: &SparseOperatorSet) -> f64 {
    let alpha = state.alpha;
    let mut primal = 0.0;
    for pair in DirectionPair::ALL {
        let (du, dv) = ops.pair(pair);
        let gu = du.matvec(&state.z.z);
        let gv = dv.matvec(&state.z.z);
        let k = pair.slot();
        for i in 0..state.z.len() {
            if du.row_nnz(i) == 0 {
                continue;
            }
            let (eu, ev) = (gu[i] - g.p[i], gv[i] - g.q[i]);
            let b = &mut state.b[k];
            let r = tv_shrinkage([eu + b.u[i], ev + b.v[i]], alpha);
            state.r[k].u[i] = r[0];
            state.r[k].v[i] = r[1];
            let (cu, cv) = (eu - r[0], ev - r[1]);
            b.u[i] += cu;
            b.v[i] += cv;
            primal += cu.hypot(cv);
        }
    }
    primal
}

/// `E_TV(z) = ¼ Σ_{UV} Σ_{Ω^{UV}} ‖∇^{UV}z − g‖ + Σ λ (z − z⁰)²`.
pub fn tv_energy(ops: &SparseOperatorSet, g: &GradientField, prior: &PriorField, z: &[f64]) -> f64 {
    let mut e = 0.0;
    for pair in DirectionPair::ALL {
        let (du, dv) = ops.pair(pair);
        let gu = du.matvec(z);
        let gv = dv.matvec(z);
        for i in 0..z.len() {
            if du.row_nnz(i) > 0 {
                e += 0.25 * (gu[i] - g.p[i]).hypot(gv[i] - g.q[i]);
            }
        }
    }
    e + (0..z.len()).map(|i| prior.lambda[i] * (z[i] - prior.z0[i]).powi(2)).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct TvOutput {
    pub depth: DepthMap,
    pub iterations: usize,
    /// Summed primal residual after every iteration.
    pub residual_history: Vec<f64>,
    pub state: AdmmState,
}

/// Runs ADMM from `z_init`, or from the least-squares solution when `None`.
pub fn integrate_tv(
    disc: &Discretization,
    g: &GradientField,
    prior: &PriorField,
    cfg: &TvConfig,
    z_init: Option<&DepthMap>,
) -> Result<TvOutput> {
    cfg.validate()?;
    let n = disc.len();
    g.check_len(n)?;
    prior.check_len(n)?;
    prior.validate()?;
    check_isolated(disc, prior)?;
    let z0 = match z_init {
        Some(z) if z.len() != n => {
            return Err(Error::DimensionMismatch(format!("initial depth has {} values, domain {n}", z.len())))
        }
        Some(z) => z.clone(),
        None => integrate_quadratic(disc, g, prior, &SolverConfig::default())?.depth,
    };
    let ops = &disc.ops;
    let solver = ZSolver::new(ops, prior, cfg.alpha, cfg.solver)?;
    let mut state = AdmmState::new(z0, cfg.alpha);
    let mut history = Vec::with_capacity(cfg.iterations);
    let exit = cfg.exit_residual * n as f64;
    while state.iteration < cfg.iterations {
        let rhs = tv_rhs(ops, g, prior, &state);
        state.z = DepthMap::new(solver.solve(&rhs, &state.z.z)?);
        let primal = update_auxiliaries(&mut state, g, ops);
        state.iteration += 1;
        history.push(primal);
        if primal < exit {
            break;
        }
    }
    debug!(
        "TV: {} iterations, final primal residual {:e}",
        state.iteration,
        history.last().copied().unwrap_or(0.0)
    );
    let mut z = state.z.z.clone();
    fix_free_components(disc, prior, &mut z);
    Ok(TvOutput {
        depth: DepthMap::new(z),
        iterations: state.iteration,
        residual_history: history,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shrinkage_threshold() {
        assert_eq!(tv_shrinkage([0.0, 0.0], 1.0), [0.0, 0.0]);
        assert_eq!(tv_shrinkage([4.0, 0.0], 1.0), [0.0, 0.0]);
        assert_eq!(tv_shrinkage([8.0, 0.0], 1.0), [4.0, 0.0]);
        let r = tv_shrinkage([3.0, 4.0], 2.0);
        assert!((r[0] - 1.8).abs() < 1e-15 && (r[1] - 2.4).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_keeps_prior_mean() {
        let disc = Discretization::from_mask(crate::domain::DomainMask::full(6, 5).unwrap()).unwrap();
        let n = disc.len();
        let out = integrate_tv(&disc, &GradientField::zeros(n), &PriorField::default_for(n), &TvConfig::default(), None)
            .unwrap();
        assert!(out.depth.z.iter().all(|&z| z.abs() < 1e-12));
    }
}
