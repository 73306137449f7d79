//! Per-pixel fields stored over the domain in linear-index order.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::raster::Raster;

/// Observed gradient `g = (p, q)`: `p` along rows (u), `q` along columns (v).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl GradientField {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::DimensionMismatch(format!("p has {} values, q has {}", p.len(), q.len())));
        }
        if p.iter().chain(&q).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("gradient contains non-finite values".into()));
        }
        Ok(Self { p, q })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            p: vec![0.0; n],
            q: vec![0.0; n],
        }
    }

    pub fn from_rasters(domain: &Domain, p: &Raster<f64>, q: &Raster<f64>) -> Result<Self> {
        Self::new(domain.gather(p)?, domain.gather(q)?)
    }

    pub fn to_rasters(&self, domain: &Domain) -> (Raster<f64>, Raster<f64>) {
        (domain.scatter(&self.p, 0.0), domain.scatter(&self.q, 0.0))
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// `‖g‖_∞`, the largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.p.iter().chain(&self.q).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "gradient has {} values, domain has {n} pixels",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Depth values over the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub z: Vec<f64>,
}

impl DepthMap {
    pub fn new(z: Vec<f64>) -> Self {
        Self { z }
    }

    pub fn zeros(n: usize) -> Self {
        Self { z: vec![0.0; n] }
    }

    pub fn from_raster(domain: &Domain, r: &Raster<f64>) -> Result<Self> {
        Ok(Self { z: domain.gather(r)? })
    }

    /// Raster with `NaN` outside the domain.
    pub fn to_raster(&self, domain: &Domain) -> Raster<f64> {
        domain.scatter(&self.z, f64::NAN)
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.z.iter().sum::<f64>() / self.z.len() as f64
    }
}

/// Prior depth `z⁰` with per-pixel weights `λ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorField {
    pub z0: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl PriorField {
    pub const DEFAULT_LAMBDA: f64 = 1e-6;

    pub fn new(z0: Vec<f64>, lambda: Vec<f64>) -> Result<Self> {
        if z0.len() != lambda.len() {
            return Err(Error::DimensionMismatch(format!(
                "z0 has {} values, lambda has {}",
                z0.len(),
                lambda.len()
            )));
        }
        let prior = Self { z0, lambda };
        prior.validate()?;
        Ok(prior)
    }

    /// `λ ≡ 10⁻⁶`, `z⁰ ≡ 0`.
    pub fn default_for(n: usize) -> Self {
        Self::uniform(n, Self::DEFAULT_LAMBDA)
    }

    pub fn uniform(n: usize, lambda: f64) -> Self {
        Self {
            z0: vec![0.0; n],
            lambda: vec![lambda; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, &l) in self.lambda.iter().enumerate() {
            if l < 0.0 || l.is_nan() {
                return Err(Error::NegativeWeight { index: i, value: l });
            }
        }
        if self.z0.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("prior contains non-finite values".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.z0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z0.is_empty()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "prior has {} values, domain has {n} pixels",
                self.len()
            )));
        }
        Ok(())
    }
}
