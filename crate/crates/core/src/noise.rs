//! Seeded additive Gaussian noise on gradient fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_shape, Raster};

/// Noise with standard deviation `relative_sigma · ‖g‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub relative_sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(relative_sigma: f64, seed: u64) -> Result<Self> {
        if !(relative_sigma >= 0.0) || !relative_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise level must be a non-negative number, got {relative_sigma}"
            )));
        }
        Ok(Self { relative_sigma, seed })
    }

    /// Perturbs `p` then `q` in row-major order. The draw at a pixel does not
    /// depend on any mask, so the same seed gives the same noise whatever
    /// domain is integrated later.
    pub fn apply(&self, p: &mut Raster<f64>, q: &mut Raster<f64>) -> Result<()> {
        ensure_same_shape(p, q, "gradient components")?;
        let g_max = p
            .as_slice()
            .iter()
            .chain(q.as_slice())
            .fold(0.0f64, |m, x| m.max(x.abs()));
        let sigma = self.relative_sigma * g_max;
        if sigma == 0.0 {
            return Ok(());
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for x in p.as_mut_slice().iter_mut().chain(q.as_mut_slice()) {
            *x += normal.sample(&mut rng);
        }
        Ok(())
    }
}
