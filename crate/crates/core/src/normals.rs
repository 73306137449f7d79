//! Conversion between unit normals and depth gradients.
//!
//! A surface `z(u, v)` has normal `(−p, −q, 1)/√(1 + p² + q²)`, hence
//! `p = −n₁/n₃` and `q = −n₂/n₃`.

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Normals with `n₃` at or below this are treated as grazing.
pub const DEFAULT_MIN_NZ: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct ConvertedGradient {
    pub p: Raster<f64>,
    pub q: Raster<f64>,
    /// `false` where `n₃` was too small; `p` and `q` are 0 there.
    pub reliable: Raster<bool>,
}

pub fn normals_to_gradient(normals: &Raster<[f64; 3]>, min_nz: f64) -> Result<ConvertedGradient> {
    if !(min_nz >= 0.0) {
        return Err(Error::InvalidParameter(format!("normal threshold must be non-negative, got {min_nz}")));
    }
    let (h, w) = normals.shape();
    let mut p = Raster::filled(h, w, 0.0);
    let mut q = Raster::filled(h, w, 0.0);
    let mut reliable = Raster::filled(h, w, false);
    for u in 0..h {
        for v in 0..w {
            let [n1, n2, n3] = normals.at(u, v);
            if !(n1.is_finite() && n2.is_finite() && n3.is_finite()) {
                return Err(Error::InvalidParameter(format!("non-finite normal at ({u}, {v})")));
            }
            if n3 > min_nz {
                p.set(u, v, -n1 / n3);
                q.set(u, v, -n2 / n3);
                reliable.set(u, v, true);
            }
        }
    }
    Ok(ConvertedGradient { p, q, reliable })
}

pub fn gradient_to_normals(p: &Raster<f64>, q: &Raster<f64>) -> Result<Raster<[f64; 3]>> {
    crate::raster::ensure_same_shape(p, q, "gradient components")?;
    let (h, w) = p.shape();
    Ok(Raster::from_fn(h, w, |u, v| unit_normal(p.at(u, v), q.at(u, v))))
}

pub(crate) fn unit_normal(p: f64, q: f64) -> [f64; 3] {
    let s = (1.0 + p * p + q * q).sqrt();
    [-p / s, -q / s, 1.0 / s]
}
