//! Non-convex robust integration minimised by iPiano.
//!
//! `E_Φ = f + g` with `f(z) = ¼ Σ_{UV} Σ_{Ω^{UV}} Φ(‖∇^{UV}z − g‖)` smooth but
//! non-convex and `g(z) = ‖Λ(z − z⁰)‖²` handled through its proximal map.

use log::debug;

use crate::domain::DirectionPair;
use crate::error::{Error, Result};
use crate::fields::{DepthMap, GradientField, PriorField};
use crate::operators::{Discretization, SparseOperatorSet};
use crate::quadratic::check_isolated;
use crate::sparse::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiFunction {
    /// `Φ₁(s) = log(s² + β²)`
    Log { beta: f64 },
    /// `Φ₂(s) = s² / (s² + γ²)`
    Rational { gamma: f64 },
}

impl PhiFunction {
    pub fn validate(&self) -> Result<()> {
        let (name, x) = match *self {
            PhiFunction::Log { beta } => ("beta", beta),
            PhiFunction::Rational { gamma } => ("gamma", gamma),
        };
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
        }
        Ok(())
    }

    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            PhiFunction::Log { beta } => (s * s + beta * beta).ln(),
            PhiFunction::Rational { gamma } => s * s / (s * s + gamma * gamma),
        }
    }

    pub fn deriv(&self, s: f64) -> f64 {
        s * self.weight(s * s)
    }

    /// `Φ'(s)/s` as a function of `s²`; finite at 0.
    fn weight(&self, s2: f64) -> f64 {
        match *self {
            PhiFunction::Log { beta } => 2.0 / (s2 + beta * beta),
            PhiFunction::Rational { gamma } => {
                let d = s2 + gamma * gamma;
                2.0 * gamma * gamma / (d * d)
            }
        }
    }
}

/// Residual components `∇^{UV}z − g` on one `Ω^{UV}` (zero elsewhere).
fn pair_residual(ops: &SparseOperatorSet, pair: DirectionPair, g: &GradientField, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let (du, dv) = ops.pair(pair);
    let mut ru = du.matvec(z);
    let mut rv = dv.matvec(z);
    for i in 0..z.len() {
        if du.row_nnz(i) > 0 {
            ru[i] -= g.p[i];
            rv[i] -= g.q[i];
        }
    }
    (ru, rv)
}

/// `¼ Σ_{UV} Σ_{Ω^{UV}} φ(‖∇^{UV}z − g‖)` for an arbitrary penalty `φ`.
pub fn pair_fidelity(ops: &SparseOperatorSet, g: &GradientField, z: &[f64], phi: impl Fn(f64) -> f64) -> f64 {
    let mut f = 0.0;
    for pair in DirectionPair::ALL {
        let (du, _) = ops.pair(pair);
        let (ru, rv) = pair_residual(ops, pair, g, z);
        for i in 0..z.len() {
            if du.row_nnz(i) > 0 {
                f += 0.25 * phi(ru[i].hypot(rv[i]));
            }
        }
    }
    f
}

/// The smooth part `f`.
pub fn f_value(ops: &SparseOperatorSet, g: &GradientField, phi: PhiFunction, z: &[f64]) -> f64 {
    pair_fidelity(ops, g, z, |s| phi.eval(s))
}

/// `∇f = ¼ Σ Σ Dᵀ(Dz − g)·Φ'(‖Dz − g‖)/‖Dz − g‖`.
pub fn grad_f(ops: &SparseOperatorSet, g: &GradientField, phi: PhiFunction, z: &[f64]) -> Vec<f64> {
    let n = z.len();
    let mut grad = vec![0.0; n];
    for pair in DirectionPair::ALL {
        let (du, dv) = ops.pair(pair);
        let (mut ru, mut rv) = pair_residual(ops, pair, g, z);
        for i in 0..n {
            let w = 0.25 * phi.weight(ru[i] * ru[i] + rv[i] * rv[i]);
            ru[i] *= w;
            rv[i] *= w;
        }
        let a = du.transpose_matvec(&ru);
        let b = dv.transpose_matvec(&rv);
        for i in 0..n {
            grad[i] += a[i] + b[i];
        }
    }
    grad
}

pub fn g_value(prior: &PriorField, z: &[f64]) -> f64 {
    (0..z.len()).map(|i| prior.lambda[i] * (z[i] - prior.z0[i]).powi(2)).sum()
}

pub fn phi_energy(ops: &SparseOperatorSet, g: &GradientField, prior: &PriorField, phi: PhiFunction, z: &[f64]) -> f64 {
    f_value(ops, g, phi, z) + g_value(prior, z)
}

/// `(I + α₁∂g)⁻¹(x̂) = (I + 2α₁Λ²)⁻¹(x̂ + 2α₁Λ²z⁰)`.
pub fn prox_g(x_hat: &[f64], alpha1: f64, prior: &PriorField) -> Vec<f64> {
    x_hat
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let t = 2.0 * alpha1 * prior.lambda[i];
            (x + t * prior.z0[i]) / (1.0 + t)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpianoConfig {
    /// Initial step on `f`; adapted by backtracking.
    pub alpha1: f64,
    /// Inertia, `0 ≤ α₂ < 1`.
    pub alpha2: f64,
    pub iterations: usize,
    /// Accepted steps between attempts to double `α₁`.
    pub grow_every: usize,
    /// Backtracking gives up below this `α₁`.
    pub min_alpha1: f64,
}

impl Default for IpianoConfig {
    fn default() -> Self {
        Self {
            alpha1: 0.1,
            alpha2: 0.8,
            iterations: 1000,
            grow_every: 10,
            min_alpha1: 1e-12,
        }
    }
}

impl IpianoConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1 > 0.0) || !self.alpha1.is_finite() {
            return Err(Error::InvalidParameter(format!("alpha1 must be positive, got {}", self.alpha1)));
        }
        if !(0.0..1.0).contains(&self.alpha2) {
            return Err(Error::InvalidParameter(format!("alpha2 must lie in [0, 1), got {}", self.alpha2)));
        }
        if self.grow_every == 0 {
            return Err(Error::InvalidParameter("grow_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NonconvexOutput {
    pub depth: DepthMap,
    /// `E_Φ` of the initial guess followed by every iterate.
    pub energy_history: Vec<f64>,
    pub final_alpha1: f64,
}

/// iPiano from `z_init`. A step is accepted when
/// `f(z⁺) ≤ f(z) + ⟨∇f(z), z⁺ − z⟩ + (L/2)‖z⁺ − z‖²` with
/// `L = 1.98(1 − α₂)/α₁`, i.e. `α₁` strictly below `2(1 − α₂)/L`.
pub fn integrate_nonconvex(
    disc: &Discretization,
    g: &GradientField,
    prior: &PriorField,
    phi: PhiFunction,
    cfg: &IpianoConfig,
    z_init: &DepthMap,
) -> Result<NonconvexOutput> {
    phi.validate()?;
    cfg.validate()?;
    let n = disc.len();
    g.check_len(n)?;
    prior.check_len(n)?;
    prior.validate()?;
    check_isolated(disc, prior)?;
    if z_init.len() != n {
        return Err(Error::DimensionMismatch(format!("initial depth has {} values, domain {n}", z_init.len())));
    }
    let ops = &disc.ops;
    let mut z = z_init.z.clone();
    let mut z_prev = z.clone();
    let mut alpha1 = cfg.alpha1;
    let mut accepted = 0usize;
    let mut f_z = f_value(ops, g, phi, &z);
    let mut history = vec![f_z + g_value(prior, &z)];
    for k in 0..cfg.iterations {
        let grad = grad_f(ops, g, phi, &z);
        if accepted > 0 && accepted % cfg.grow_every == 0 {
            alpha1 *= 2.0;
        }
        loop {
            let x_hat: Vec<f64> = (0..n)
                .map(|i| z[i] - alpha1 * grad[i] + cfg.alpha2 * (z[i] - z_prev[i]))
                .collect();
            let z_new = prox_g(&x_hat, alpha1, prior);
            let step: Vec<f64> = (0..n).map(|i| z_new[i] - z[i]).collect();
            let f_new = f_value(ops, g, phi, &z_new);
            let l = 1.98 * (1.0 - cfg.alpha2) / alpha1;
            let bound = f_z + dot(&grad, &step) + 0.5 * l * dot(&step, &step);
            if f_new <= bound + 1e-12 * f_z.abs().max(1.0) && f_new.is_finite() {
                z_prev = std::mem::replace(&mut z, z_new);
                f_z = f_new;
                accepted += 1;
                break;
            }
            alpha1 *= 0.5;
            if alpha1 < cfg.min_alpha1 {
                return Err(Error::BacktrackingFailed {
                    iteration: k,
                    alpha1,
                    last_stable: z,
                });
            }
        }
        history.push(f_z + g_value(prior, &z));
    }
    debug!(
        "iPiano: {} iterations, energy {:e} -> {:e}, alpha1 {alpha1:e}",
        cfg.iterations,
        history[0],
        history.last().copied().unwrap_or(0.0)
    );
    Ok(NonconvexOutput {
        depth: DepthMap::new(z),
        energy_history: history,
        final_alpha1: alpha1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_values_at_zero() {
        let p1 = PhiFunction::Log { beta: 0.5 };
        assert_eq!(p1.eval(0.0), 0.25f64.ln());
        assert_eq!(p1.deriv(0.0), 0.0);
        let p2 = PhiFunction::Rational { gamma: 2.0 };
        assert_eq!(p2.eval(0.0), 0.0);
        assert!(p2.eval(200.0) > 0.9999);
    }

    #[test]
    fn prox_formula() {
        let prior = PriorField::uniform(3, 1.0);
        assert_eq!(prox_g(&[2.0, -4.0, 1.0], 0.5, &prior), vec![1.0, -2.0, 0.5]);
        let free = PriorField::uniform(2, 0.0);
        assert_eq!(prox_g(&[3.0, 7.0], 0.9, &free), vec![3.0, 7.0]);
    }

    #[test]
    fn bad_parameters() {
        assert!(PhiFunction::Log { beta: 0.0 }.validate().is_err());
        let cfg = IpianoConfig {
            alpha2: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
