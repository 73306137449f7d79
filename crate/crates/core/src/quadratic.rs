//! Least-squares integration: minimise the quadratic energy by solving
//! `(L + Λ²) z = D_u p + D_v q + Λ² z⁰`.

use log::debug;

use crate::error::{Error, Result};
use crate::fields::{DepthMap, GradientField, PriorField};
use crate::linalg::{pcg_solve, SolverConfig};
use crate::operators::{build_quadratic_system, Discretization};

#[derive(Debug, Clone)]
pub struct QuadraticOutput {
    pub depth: DepthMap,
    pub iterations: usize,
    pub residual: f64,
}

/// Rejects pixels that are coupled to nothing: no neighbour and `λ = 0`.
pub(crate) fn check_isolated(disc: &Discretization, prior: &PriorField) -> Result<()> {
    for i in disc.domain.isolated_pixels() {
        if prior.lambda[i] <= 0.0 {
            let (u, v) = disc.domain.index().pixel(i);
            return Err(Error::SingularSystem(format!(
                "pixel ({u}, {v}) has no neighbour in the domain and zero prior weight"
            )));
        }
    }
    Ok(())
}

/// On connected components without any prior weight the depth is defined up
/// to a constant; fix it by matching the mean of `z⁰` there.
pub(crate) fn fix_free_components(disc: &Discretization, prior: &PriorField, z: &mut [f64]) {
    let (label, count) = disc.domain.components();
    let mut anchored = vec![false; count];
    let mut sum_z = vec![0.0; count];
    let mut sum_z0 = vec![0.0; count];
    let mut size = vec![0usize; count];
    for i in 0..z.len() {
        let c = label[i];
        anchored[c] |= prior.lambda[i] > 0.0;
        sum_z[c] += z[i];
        sum_z0[c] += prior.z0[i];
        size[c] += 1;
    }
    for i in 0..z.len() {
        let c = label[i];
        if !anchored[c] {
            z[i] += (sum_z0[c] - sum_z[c]) / size[c] as f64;
        }
    }
}

/// Least-squares integration with `z⁰` as the initial guess.
pub fn integrate_quadratic(
    disc: &Discretization,
    g: &GradientField,
    prior: &PriorField,
    cfg: &SolverConfig,
) -> Result<QuadraticOutput> {
    let n = disc.len();
    g.check_len(n)?;
    prior.check_len(n)?;
    check_isolated(disc, prior)?;
    let (a, b) = build_quadratic_system(&disc.ops, g, prior)?;
    let report = pcg_solve(&a, &b, &prior.z0, cfg)?;
    debug!(
        "quadratic solve: {} unknowns, {} iterations, residual {:e}",
        n, report.iterations, report.residual
    );
    let mut z = report.x;
    fix_free_components(disc, prior, &mut z);
    Ok(QuadraticOutput {
        depth: DepthMap::new(z),
        iterations: report.iterations,
        residual: report.residual,
    })
}
