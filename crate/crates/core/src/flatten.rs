//! Piecewise-constant image flattening from control points.
//!
//! The control points are the pixels with the steepest CIE-LAB lightness.
//! Each colour channel is integrated independently with the Mumford–Shah
//! method from its own gradient on the control points (zero elsewhere),
//! with a strong prior holding the original values there.

use log::warn;

use crate::domain::DomainMask;
use crate::error::{Error, Result};
use crate::fields::{GradientField, PriorField};
use crate::mumford_shah::{integrate_mumford_shah, MsConfig};
use crate::operators::Discretization;
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlPointSpec {
    /// Fraction of pixels kept as control points, in `(0, 1]`.
    pub fraction: f64,
    pub lambda_on: f64,
    pub lambda_off: f64,
}

impl Default for ControlPointSpec {
    fn default() -> Self {
        Self {
            fraction: 0.10,
            lambda_on: 10.0,
            lambda_off: 1e-9,
        }
    }
}

impl ControlPointSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.fraction > 0.0 && self.fraction <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "control-point fraction must lie in (0, 1], got {}",
                self.fraction
            )));
        }
        if !(self.lambda_on >= 0.0 && self.lambda_off >= 0.0) {
            return Err(Error::InvalidParameter("prior weights must be non-negative".into()));
        }
        Ok(())
    }
}

fn srgb_to_linear(c: f64) -> f64 {
    let c = (c / 255.0).clamp(0.0, 1.0);
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// CIE L* (0 to 100) of an 8-bit sRGB colour, D65 white.
pub fn lightness(rgb: [f64; 3]) -> f64 {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    const D: f64 = 6.0 / 29.0;
    let f = if y > D * D * D { y.cbrt() } else { y / (3.0 * D * D) + 4.0 / 29.0 };
    116.0 * f - 16.0
}

/// Forward differences, zero on the last row/column; `(∂_u, ∂_v)`. A jump
/// lands on a single pixel, which keeps the data consistent with a
/// piecewise-constant image.
pub fn image_gradient(r: &Raster<f64>) -> (Raster<f64>, Raster<f64>) {
    let (h, w) = r.shape();
    let p = Raster::from_fn(h, w, |u, v| if u + 1 < h { r.at(u + 1, v) - r.at(u, v) } else { 0.0 });
    let q = Raster::from_fn(h, w, |u, v| if v + 1 < w { r.at(u, v + 1) - r.at(u, v) } else { 0.0 });
    (p, q)
}

/// The `⌈fraction·N⌉` pixels with the largest lightness gradient norm (ties
/// broken by raster order).
pub fn select_control_points(image: &Raster<[f64; 3]>, fraction: f64) -> Raster<bool> {
    let (h, w) = image.shape();
    let (p, q) = image_gradient(&image.map(|&c| lightness(c)));
    let mut order: Vec<(f64, usize)> = p
        .as_slice()
        .iter()
        .zip(q.as_slice())
        .enumerate()
        .map(|(k, (a, b))| (a.hypot(*b), k))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let keep = ((fraction * (h * w) as f64).ceil() as usize).min(h * w);
    let mut mask = Raster::filled(h, w, false);
    for &(_, k) in &order[..keep] {
        mask.as_mut_slice()[k] = true;
    }
    mask
}

/// Mumford–Shah settings for flattening unit-range channels. The cut width
/// `ε` is one pixel: thinner cuts are too expensive to open before the data
/// term has smeared the control points.
pub fn flatten_ms_config() -> MsConfig {
    MsConfig {
        mu: 180.0,
        epsilon: 1.0,
        ..MsConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct Flattened {
    pub image: Raster<[f64; 3]>,
    pub control: Raster<bool>,
}

/// Flattens an RGB image with channel values in `[0, 255]`.
pub fn flatten_image(image: &Raster<[f64; 3]>, spec: &ControlPointSpec, ms: &MsConfig) -> Result<Flattened> {
    spec.validate()?;
    ms.validate()?;
    let (h, w) = image.shape();
    let control = select_control_points(image, spec.fraction);
    let first = image.as_slice().first().copied();
    if image.as_slice().iter().all(|&c| Some(c) == first) {
        warn!("constant image, nothing to flatten");
        return Ok(Flattened {
            image: image.clone(),
            control,
        });
    }
    let disc = Discretization::from_mask(DomainMask::full(h, w)?)?;
    let on = |r: &Raster<f64>| Raster::from_fn(h, w, |u, v| if control.at(u, v) { r.at(u, v) } else { 0.0 });
    let lambda = control.map(|&c| if c { spec.lambda_on } else { spec.lambda_off });
    let lambda = disc.domain.gather(&lambda)?;
    let mut out = Raster::filled(h, w, [0.0; 3]);
    for c in 0..3 {
        // unit intensities, so that µ and ε keep their meaning across bit depths
        let channel = image.map(|px| px[c] / 255.0);
        let (p, q) = image_gradient(&channel);
        let g = GradientField::from_rasters(&disc.domain, &on(&p), &on(&q))?;
        let prior = PriorField::new(disc.domain.gather(&on(&channel))?, lambda.clone())?;
        let res = integrate_mumford_shah(&disc, &g, &prior, ms, None)?;
        let z = disc.domain.scatter(&res.depth.z, 0.0);
        for (px, &x) in out.as_mut_slice().iter_mut().zip(z.as_slice()) {
            px[c] = 255.0 * x;
        }
    }
    Ok(Flattened { image: out, control })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lightness_extremes() {
        assert!(lightness([0.0; 3]).abs() < 1e-12);
        assert!((lightness([255.0; 3]) - 100.0).abs() < 1e-9);
        assert!((lightness([119.0; 3]) - 50.0).abs() < 0.5);
    }

    #[test]
    fn control_count() {
        let img = Raster::from_fn(10, 10, |u, v| [(u * v) as f64; 3]);
        let c = select_control_points(&img, 0.1);
        assert_eq!(c.as_slice().iter().filter(|&&b| b).count(), 10);
    }
}
