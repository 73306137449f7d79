//! Mumford–Shah integration through the Ambrosio–Tortorelli approximation.
//!
//! One indicator field `w` per difference direction, alternately minimised
//! with the depth:
//!
//! `E_AT = (µ/2)Σ‖W(Dz − g)‖² + (ε/2)Σ‖Dw‖² + (1/8ε)Σ‖w − 1‖² + ‖Λ(z − z⁰)‖²`.

use log::debug;

use crate::domain::Direction;
use crate::error::{Error, Result};
use crate::fields::{DepthMap, GradientField, PriorField};
use crate::linalg::{build_preconditioner, pcg_with, PreconditionerKind, SolverConfig};
use crate::operators::{Discretization, SparseOperatorSet};
use crate::quadratic::{check_isolated, fix_free_components, integrate_quadratic};
use crate::sparse::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsConfig {
    pub mu: f64,
    pub epsilon: f64,
    pub iterations: usize,
    /// Inner solver of every sub-problem; rebuilt per call since the
    /// matrices change.
    pub solver: SolverConfig,
}

impl Default for MsConfig {
    fn default() -> Self {
        Self {
            mu: 45.0,
            epsilon: 0.1,
            iterations: 50,
            solver: SolverConfig {
                rel_tolerance: 1e-10,
                max_iterations: 500,
                preconditioner: PreconditionerKind::None,
            },
        }
    }
}

impl MsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("mu", self.mu), ("epsilon", self.epsilon)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
            }
        }
        self.solver.validate()
    }
}

/// `w_u^+`, `w_u^-`, `w_v^+`, `w_v^-`, indexed by [`Direction::slot`].
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorFields {
    pub w: [Vec<f64>; 4],
}

impl IndicatorFields {
    pub fn ones(n: usize) -> Self {
        Self::constant(n, 1.0)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self {
            w: std::array::from_fn(|_| vec![value; n]),
        }
    }

    pub fn get(&self, dir: Direction) -> &[f64] {
        &self.w[dir.slot()]
    }

    pub fn len(&self) -> usize {
        self.w[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-pixel minimum over the four fields.
    pub fn edge_map(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.w.iter().fold(f64::INFINITY, |m, w| m.min(w[i])))
            .collect()
    }
}

fn data(g: &GradientField, dir: Direction) -> &[f64] {
    if dir.is_u() {
        &g.p
    } else {
        &g.q
    }
}

/// `D z − data` on `Ω^{dir}`, zero elsewhere.
fn residual(ops: &SparseOperatorSet, g: &GradientField, dir: Direction, z: &[f64]) -> Vec<f64> {
    let d = ops.d(dir);
    let mut r = d.matvec(z);
    let data = data(g, dir);
    for i in 0..z.len() {
        r[i] = if d.row_nnz(i) > 0 { r[i] - data[i] } else { 0.0 };
    }
    r
}

pub fn at_energy(
    ops: &SparseOperatorSet,
    g: &GradientField,
    prior: &PriorField,
    cfg: &MsConfig,
    z: &[f64],
    w: &IndicatorFields,
) -> f64 {
    let mut e = 0.0;
    for dir in Direction::ALL {
        let wd = w.get(dir);
        let r = residual(ops, g, dir, z);
        let dw = ops.d(dir).matvec(wd);
        for i in 0..z.len() {
            e += 0.5 * cfg.mu * (wd[i] * r[i]).powi(2);
            e += 0.5 * cfg.epsilon * dw[i] * dw[i];
            e += (wd[i] - 1.0).powi(2) / (8.0 * cfg.epsilon);
        }
    }
    e + (0..z.len()).map(|i| prior.lambda[i] * (z[i] - prior.z0[i]).powi(2)).sum::<f64>()
}

fn solve(a: &SparseMatrix, b: &[f64], x0: &[f64], cfg: &SolverConfig) -> Vec<f64> {
    let m = build_preconditioner(cfg.preconditioner, a);
    let run = pcg_with(a, b, x0, m.as_ref(), cfg.rel_tolerance, cfg.max_iterations);
    // warm-started CG never increases the quadratic objective, so an
    // unconverged iterate is still a valid descent step
    run.x
}

/// `(µΣDᵀW²D + 2Λ²) z = µΣDᵀW²g + 2Λ²z⁰`, warm-started from `z_k`.
pub fn ms_z_update(
    ops: &SparseOperatorSet,
    z_k: &[f64],
    w: &IndicatorFields,
    g: &GradientField,
    prior: &PriorField,
    cfg: &MsConfig,
) -> Result<Vec<f64>> {
    let n = z_k.len();
    let mut a = SparseMatrix::zeros(n, n);
    let mut rhs: Vec<f64> = (0..n).map(|i| 2.0 * prior.lambda[i] * prior.z0[i]).collect();
    for dir in Direction::ALL {
        let d = ops.d(dir);
        let w2: Vec<f64> = w.get(dir).iter().map(|x| cfg.mu * x * x).collect();
        a = a.add(&d.weighted_gram(&w2));
        let data = data(g, dir);
        let wd: Vec<f64> = (0..n).map(|i| w2[i] * data[i]).collect();
        for (r, x) in rhs.iter_mut().zip(d.transpose_matvec(&wd)) {
            *r += x;
        }
    }
    let two_lambda: Vec<f64> = prior.lambda.iter().map(|l| 2.0 * l).collect();
    let a = a.add_diagonal(&two_lambda).into_symmetric()?;
    Ok(solve(&a, &rhs, z_k, &cfg.solver))
}

/// Minimises `E_AT` in the field of `dir` with everything else frozen:
/// `(µ diag(r²) + εDᵀD + I/4ε) w = 1/4ε`.
pub fn ms_w_update(
    ops: &SparseOperatorSet,
    z: &[f64],
    w_k: &[f64],
    dir: Direction,
    g: &GradientField,
    cfg: &MsConfig,
) -> Result<Vec<f64>> {
    let n = z.len();
    let r = residual(ops, g, dir, z);
    let well = 1.0 / (4.0 * cfg.epsilon);
    let diag: Vec<f64> = r.iter().map(|x| cfg.mu * x * x + well).collect();
    let a = ops
        .d(dir)
        .weighted_gram(&vec![cfg.epsilon; n])
        .add_diagonal(&diag)
        .into_symmetric()?;
    Ok(solve(&a, &vec![well; n], w_k, &cfg.solver))
}

#[derive(Debug, Clone)]
pub struct MsOutput {
    pub depth: DepthMap,
    pub indicators: IndicatorFields,
    /// `E_AT` at the start and after every sub-update (z, then u+, u−, v+, v−).
    pub energy_history: Vec<f64>,
}

/// Alternating minimisation from `z_init` (least squares when `None`) and `w ≡ 1`.
pub fn integrate_mumford_shah(
    disc: &Discretization,
    g: &GradientField,
    prior: &PriorField,
    cfg: &MsConfig,
    z_init: Option<&DepthMap>,
) -> Result<MsOutput> {
    cfg.validate()?;
    let n = disc.len();
    g.check_len(n)?;
    prior.check_len(n)?;
    prior.validate()?;
    check_isolated(disc, prior)?;
    let mut z = match z_init {
        Some(z) if z.len() != n => {
            return Err(Error::DimensionMismatch(format!("initial depth has {} values, domain {n}", z.len())))
        }
        Some(z) => z.z.clone(),
        None => integrate_quadratic(disc, g, prior, &SolverConfig::default())?.depth.z,
    };
    let ops = &disc.ops;
    let mut w = IndicatorFields::ones(n);
    let mut history = Vec::with_capacity(1 + 5 * cfg.iterations);
    history.push(at_energy(ops, g, prior, cfg, &z, &w));
    for _ in 0..cfg.iterations {
        z = ms_z_update(ops, &z, &w, g, prior, cfg)?;
        history.push(at_energy(ops, g, prior, cfg, &z, &w));
        for dir in Direction::ALL {
            w.w[dir.slot()] = ms_w_update(ops, &z, w.get(dir), dir, g, cfg)?;
            history.push(at_energy(ops, g, prior, cfg, &z, &w));
        }
    }
    debug!(
        "Mumford-Shah: {} alternations, E_AT {:e} -> {:e}",
        cfg.iterations,
        history[0],
        history.last().copied().unwrap_or(0.0)
    );
    fix_free_components(disc, prior, &mut z);
    Ok(MsOutput {
        depth: DepthMap::new(z),
        indicators: w,
        energy_history: history,
    })
}
