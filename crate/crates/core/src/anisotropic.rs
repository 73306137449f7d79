//! Integration by anisotropic diffusion: least squares with per-pixel
//! weights that shrink where the depth (or the data) is steep, solved by a
//! fixed point of weighted linear least-squares problems.

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};

use crate::domain::DirectionPair;
use crate::error::{Error, Result};
use crate::fields::{DepthMap, GradientField, PriorField};
use crate::linalg::{pcg_solve, EnvelopeCholesky, SolverConfig};
use crate::operators::{Discretization, SparseOperatorSet};
use crate::quadratic::{check_isolated, fix_free_components};
use crate::sparse::{norm2, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusionVariant {
    /// Scalar Perona–Malik diffusivity `1/√(‖∇z‖²/µ² + 1)`.
    PeronaMalik,
    /// Parameter-free tensor `1/(√(1 + p²)·√(‖∇z‖² + 1))`.
    Statistical,
    /// `1/(√(1 + (p/ν)²)·√(‖∇z‖²/µ² + 1))`.
    Scaled,
}

impl fmt::Display for DiffusionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiffusionVariant::PeronaMalik => "pm",
            DiffusionVariant::Statistical => "stat",
            DiffusionVariant::Scaled => "scaled",
        })
    }
}

impl FromStr for DiffusionVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pm" | "perona-malik" | "perona_malik" => Ok(Self::PeronaMalik),
            "stat" | "statistical" => Ok(Self::Statistical),
            "scaled" => Ok(Self::Scaled),
            other => Err(Error::InvalidParameter(format!("unknown diffusion variant `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionConfig {
    pub mu: f64,
    pub nu: f64,
    pub iterations: usize,
    pub variant: DiffusionVariant,
    /// Stop once `‖z_{k+1} − z_k‖ ≤ tolerance·‖z_k‖`.
    pub tolerance: f64,
    /// Used only when the Cholesky factorisation fails.
    pub fallback: SolverConfig,
}

impl Default for DiffusionConfig {
    fn default() -> Self {
        Self {
            mu: 0.2,
            nu: 10.0,
            iterations: 50,
            variant: DiffusionVariant::Scaled,
            tolerance: 1e-6,
            fallback: SolverConfig::default().with_tolerance(1e-10),
        }
    }
}

impl DiffusionConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("mu", self.mu), ("nu", self.nu)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
        }
        self.fallback.validate()
    }
}

/// The diagonals of `A^{UV}` (weighting the u-terms) and `B^{UV}` (v-terms),
/// indexed by [`DirectionPair::slot`].
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionWeights {
    pub a: [Vec<f64>; 4],
    pub b: [Vec<f64>; 4],
}

impl DiffusionWeights {
    pub fn uniform(n: usize, value: f64) -> Self {
        Self {
            a: std::array::from_fn(|_| vec![value; n]),
            b: std::array::from_fn(|_| vec![value; n]),
        }
    }

    /// Pixel-wise minimum over the eight weights.
    pub fn min_map(&self) -> Vec<f64> {
        let n = self.a[0].len();
        (0..n)
            .map(|i| self.a.iter().chain(&self.b).fold(f64::INFINITY, |m, w| m.min(w[i])))
            .collect()
    }
}

/// Weight of one term given the squared depth gradient and the data value.
pub fn diffusion_weight(variant: DiffusionVariant, mu: f64, nu: f64, grad_sq: f64, data: f64) -> f64 {
    match variant {
        DiffusionVariant::PeronaMalik => 1.0 / (grad_sq / (mu * mu) + 1.0).sqrt(),
        DiffusionVariant::Statistical => 1.0 / ((1.0 + data * data).sqrt() * (grad_sq + 1.0).sqrt()),
        DiffusionVariant::Scaled => {
            let d = data / nu;
            1.0 / ((1.0 + d * d).sqrt() * (grad_sq / (mu * mu) + 1.0).sqrt())
        }
    }
}

/// Weights at `z`; the gradient inside `a^{UV}`, `b^{UV}` is `(∂_u^U z, ∂_v^V z)`.
pub fn compute_weights(
    ops: &SparseOperatorSet,
    z: &[f64],
    g: &GradientField,
    cfg: &DiffusionConfig,
) -> DiffusionWeights {
    let n = z.len();
    let mut w = DiffusionWeights::uniform(n, 1.0);
    for pair in DirectionPair::ALL {
        let du = ops.d(pair.u).matvec(z);
        let dv = ops.d(pair.v).matvec(z);
        let k = pair.slot();
        for i in 0..n {
            let s = du[i] * du[i] + dv[i] * dv[i];
            w.a[k][i] = diffusion_weight(cfg.variant, cfg.mu, cfg.nu, s, g.p[i]);
            w.b[k][i] = diffusion_weight(cfg.variant, cfg.mu, cfg.nu, s, g.q[i]);
        }
    }
    w
}

/// Normal equations of the frozen-weight energy:
/// `(¼Σ[D_uᵀA²D_u + D_vᵀB²D_v] + Λ²) z = ¼Σ[D_uᵀA²p + D_vᵀB²q] + Λ²z⁰`.
pub fn weighted_system(
    ops: &SparseOperatorSet,
    g: &GradientField,
    prior: &PriorField,
    w: &DiffusionWeights,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = ops.len();
    let mut a = SparseMatrix::zeros(n, n);
    let mut rhs: Vec<f64> = (0..n).map(|i| prior.lambda[i] * prior.z0[i]).collect();
    for pair in DirectionPair::ALL {
        let k = pair.slot();
        for (d, weights, data) in [(ops.d(pair.u), &w.a[k], &g.p), (ops.d(pair.v), &w.b[k], &g.q)] {
            let sq: Vec<f64> = weights.iter().map(|x| 0.25 * x * x).collect();
            a = a.add(&d.weighted_gram(&sq));
            let wd: Vec<f64> = (0..n).map(|i| sq[i] * data[i]).collect();
            for (r, x) in rhs.iter_mut().zip(d.transpose_matvec(&wd)) {
                *r += x;
            }
        }
    }
    Ok((a.add_diagonal(&prior.lambda).into_symmetric()?, rhs))
}

/// `¼ΣΣ{‖A(D_u z − p)‖² + ‖B(D_v z − q)‖²} + ‖Λ(z − z⁰)‖²` with rows
/// restricted to pixels where the difference exists.
pub fn surrogate_energy(
    ops: &SparseOperatorSet,
    g: &GradientField,
    prior: &PriorField,
    w: &DiffusionWeights,
    z: &[f64],
) -> f64 {
    let mut e = 0.0;
    for pair in DirectionPair::ALL {
        let k = pair.slot();
        for (d, weights, data) in [(ops.d(pair.u), &w.a[k], &g.p), (ops.d(pair.v), &w.b[k], &g.q)] {
            let dz = d.matvec(z);
            for i in 0..z.len() {
                if d.row_nnz(i) > 0 {
                    e += 0.25 * (weights[i] * (dz[i] - data[i])).powi(2);
                }
            }
        }
    }
    e + (0..z.len()).map(|i| prior.lambda[i] * (z[i] - prior.z0[i]).powi(2)).sum::<f64>()
}

/// Exact minimiser of the frozen-weight energy. Cholesky first; PCG from
/// `z_k` if the factorisation breaks down.
pub fn weighted_ls_step(
    ops: &SparseOperatorSet,
    z_k: &[f64],
    g: &GradientField,
    prior: &PriorField,
    w: &DiffusionWeights,
    fallback: &SolverConfig,
) -> Result<Vec<f64>> {
    let (a, rhs) = weighted_system(ops, g, prior, w)?;
    match EnvelopeCholesky::factor(&a) {
        Ok(f) => Ok(f.solve(&rhs)),
        Err(e) => {
            warn!("Cholesky failed ({e}), falling back to PCG");
            Ok(pcg_solve(&a, &rhs, z_k, fallback)?.x)
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnisotropicOutput {
    pub depth: DepthMap,
    /// Weights used in the last step.
    pub weights: DiffusionWeights,
    pub iterations: usize,
    /// Frozen-weight energy before and after each step.
    pub surrogate: Vec<[f64; 2]>,
}

/// Fixed point from `z⁰`: weights at `z_k`, then the weighted least-squares
/// solution `z_{k+1}`.
pub fn integrate_anisotropic(
    disc: &Discretization,
    g: &GradientField,
    prior: &PriorField,
    cfg: &DiffusionConfig,
) -> Result<AnisotropicOutput> {
    cfg.validate()?;
    let n = disc.len();
    g.check_len(n)?;
    prior.check_len(n)?;
    prior.validate()?;
    check_isolated(disc, prior)?;
    let ops = &disc.ops;
    let mut z = prior.z0.clone();
    let mut weights = DiffusionWeights::uniform(n, 1.0);
    let mut surrogate = Vec::with_capacity(cfg.iterations);
    let mut iterations = 0;
    while iterations < cfg.iterations {
        weights = compute_weights(ops, &z, g, cfg);
        let next = weighted_ls_step(ops, &z, g, prior, &weights, &cfg.fallback)?;
        surrogate.push([
            surrogate_energy(ops, g, prior, &weights, &z),
            surrogate_energy(ops, g, prior, &weights, &next),
        ]);
        let change: Vec<f64> = next.iter().zip(&z).map(|(a, b)| a - b).collect();
        let (dz, zn) = (norm2(&change), norm2(&z));
        z = next;
        iterations += 1;
        if dz <= cfg.tolerance * zn {
            break;
        }
    }
    debug!("anisotropic diffusion: {iterations} fixed-point steps");
    fix_free_components(disc, prior, &mut z);
    Ok(AnisotropicOutput {
        depth: DepthMap::new(z),
        weights,
        iterations,
        surrogate,
    })
}
