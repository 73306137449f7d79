//! Synthetic ground-truth surfaces with analytic gradients.
//!
//! Coordinates are in pixels: `u` is the row, `v` the column, depth uses the
//! same unit. Gradients are the analytic partial derivatives of the piece of
//! the surface a pixel centre falls on, so depth jumps never show up in `g`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::domain::DomainMask;
use crate::error::{Error, Result};
use crate::raster::Raster;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    SmoothBumps,
    VaseLike,
    TentLike,
    Step,
    Plane,
}

impl SurfaceKind {
    pub const ALL: [SurfaceKind; 5] = [
        SurfaceKind::SmoothBumps,
        SurfaceKind::VaseLike,
        SurfaceKind::TentLike,
        SurfaceKind::Step,
        SurfaceKind::Plane,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::SmoothBumps => "smooth_bumps",
            SurfaceKind::VaseLike => "vase_like",
            SurfaceKind::TentLike => "tent_like",
            SurfaceKind::Step => "step",
            SurfaceKind::Plane => "plane",
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SurfaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.replace('-', "_");
        SurfaceKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::UnknownSurface(s.to_string()))
    }
}

/// Shape parameters. `amplitude` multiplies every depth (and gradient).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceParams {
    pub amplitude: f64,
}

impl Default for SurfaceParams {
    fn default() -> Self {
        Self { amplitude: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSurface {
    pub kind: SurfaceKind,
    pub depth: Raster<f64>,
    pub p: Raster<f64>,
    pub q: Raster<f64>,
    /// Object silhouette; the whole grid for kinds without one.
    pub object: DomainMask,
    /// Prior weight to use with `z⁰ = depth` when the gradient alone cannot
    /// determine the surface. The step has `g ≡ 0`, so its plateaus only
    /// exist through a prior.
    pub prior_weight: Option<Raster<f64>>,
}

struct Sample {
    z: f64,
    p: f64,
    q: f64,
    inside: bool,
}

/// Height of the step, before `amplitude`.
pub const STEP_HEIGHT: f64 = 10.0;

/// Uniform prior weight shipped with the step.
pub const STEP_PRIOR_WEIGHT: f64 = 1.0;

fn peaks(x: f64, y: f64) -> (f64, f64, f64) {
    let e1 = (-x * x - (y + 1.0).powi(2)).exp();
    let e2 = (-x * x - y * y).exp();
    let e3 = (-(x + 1.0).powi(2) - y * y).exp();
    let a = 3.0 * (1.0 - x).powi(2);
    let b = 10.0 * (x / 5.0 - x.powi(3) - y.powi(5));
    let z = a * e1 - b * e2 - e3 / 3.0;
    let dx = -6.0 * (1.0 - x) * e1 - 2.0 * x * a * e1 - 10.0 * (0.2 - 3.0 * x * x) * e2 + 2.0 * x * b * e2
        + 2.0 * (x + 1.0) * e3 / 3.0;
    let dy = -2.0 * (y + 1.0) * a * e1 + 50.0 * y.powi(4) * e2 + 2.0 * y * b * e2 + 2.0 * y * e3 / 3.0;
    (z, dx, dy)
}

fn sample(kind: SurfaceKind, n: usize, u: f64, v: f64) -> Sample {
    let nf = n as f64;
    match kind {
        SurfaceKind::Plane => Sample {
            z: u + 2.0 * v,
            p: 1.0,
            q: 2.0,
            inside: true,
        },
        SurfaceKind::SmoothBumps => {
            // peaks on [-3, 3]², x along columns and y along rows
            let h = 6.0 / (nf - 1.0);
            let (x, y) = (-3.0 + v * h, -3.0 + u * h);
            let c = nf / 32.0;
            let (z, dx, dy) = peaks(x, y);
            Sample {
                z: c * z,
                p: c * dy * h,
                q: c * dx * h,
                inside: true,
            }
        }
        SurfaceKind::VaseLike => {
            let (top, bottom) = (0.25 * nf, 0.75 * nf);
            let axis = (nf - 1.0) / 2.0;
            let r_max = 0.28 * nf;
            let t = (u - top) / (bottom - top);
            let phase = PI * (1.5 * t + 0.1);
            let r = nf * (0.2 + 0.08 * phase.sin());
            let dr = nf * 0.08 * phase.cos() * PI * 1.5 / (bottom - top);
            let d = v - axis;
            if (top..=bottom).contains(&u) && d.abs() < r {
                Sample {
                    z: (r * r - d * d) / r_max,
                    p: 2.0 * r * dr / r_max,
                    q: -2.0 * d / r_max,
                    inside: true,
                }
            } else {
                Sample {
                    z: 0.0,
                    p: 0.0,
                    q: 0.0,
                    inside: false,
                }
            }
        }
        SurfaceKind::TentLike => {
            let front = 0.3 * nf;
            let axis = (nf - 1.0) / 2.0;
            let height = 0.15 * nf;
            let slope = height / (0.2 * nf);
            let d = v - axis;
            let z = height - slope * d.abs();
            if u >= front && z > 0.0 {
                Sample {
                    z,
                    p: 0.0,
                    q: -slope * d.signum(),
                    inside: true,
                }
            } else {
                Sample {
                    z: 0.0,
                    p: 0.0,
                    q: 0.0,
                    inside: u >= front,
                }
            }
        }
        SurfaceKind::Step => Sample {
            z: if v >= nf / 2.0 { STEP_HEIGHT } else { 0.0 },
            p: 0.0,
            q: 0.0,
            inside: true,
        },
    }
}

/// Samples `kind` on a `size` x `size` grid.
pub fn generate_surface(kind: SurfaceKind, size: usize, params: SurfaceParams) -> Result<SyntheticSurface> {
    if size < 8 {
        return Err(Error::InvalidParameter(format!("surface size must be at least 8, got {size}")));
    }
    if !params.amplitude.is_finite() {
        return Err(Error::InvalidParameter("amplitude must be finite".into()));
    }
    let a = params.amplitude;
    let mut depth = Raster::filled(size, size, 0.0);
    let mut p = Raster::filled(size, size, 0.0);
    let mut q = Raster::filled(size, size, 0.0);
    let mut inside = Raster::filled(size, size, false);
    for u in 0..size {
        for v in 0..size {
            let s = sample(kind, size, u as f64, v as f64);
            depth.set(u, v, a * s.z);
            p.set(u, v, a * s.p);
            q.set(u, v, a * s.q);
            inside.set(u, v, s.inside);
        }
    }
    let object = match kind {
        SurfaceKind::VaseLike => DomainMask::new(inside)?,
        _ => DomainMask::full(size, size)?,
    };
    let prior_weight = (kind == SurfaceKind::Step).then(|| Raster::filled(size, size, STEP_PRIOR_WEIGHT));
    Ok(SyntheticSurface {
        kind,
        depth,
        p,
        q,
        object,
        prior_weight,
    })
}

/// Depth jump above which a neighbour pair counts as discontinuous, in
/// depth units after removing the gradient-predicted change.
pub const JUMP_THRESHOLD: f64 = 0.5;
/// Gradient change above which a continuous neighbour pair counts as a kink.
pub const KINK_THRESHOLD: f64 = 0.25;

/// Pixels touching a depth jump and pixels touching a kink (a continuous
/// pair whose gradients differ sharply). Meant for piecewise-smooth
/// surfaces; both pixels of an offending pair are marked.
#[derive(Debug, Clone)]
pub struct FeatureBands {
    pub jump: Raster<bool>,
    pub kink: Raster<bool>,
}

impl FeatureBands {
    /// Grows both bands by `radius` pixels (Chebyshev distance); pixels
    /// in the grown jump band are removed from the kink band.
    pub fn dilated(&self, radius: usize) -> FeatureBands {
        let jump = dilate(&self.jump, radius);
        let kink = dilate(&self.kink, radius);
        let (h, w) = kink.shape();
        let kink = Raster::from_fn(h, w, |u, v| kink.at(u, v) && !jump.at(u, v));
        FeatureBands { jump, kink }
    }
}

pub fn dilate(mask: &Raster<bool>, radius: usize) -> Raster<bool> {
    let (h, w) = mask.shape();
    Raster::from_fn(h, w, |u, v| {
        let (u0, v0) = (u.saturating_sub(radius), v.saturating_sub(radius));
        let (u1, v1) = ((u + radius).min(h - 1), (v + radius).min(w - 1));
        (u0..=u1).any(|a| (v0..=v1).any(|b| mask.at(a, b)))
    })
}

impl SyntheticSurface {
    pub fn size(&self) -> usize {
        self.depth.height()
    }

    pub fn feature_bands(&self) -> FeatureBands {
        let (h, w) = self.depth.shape();
        let mut jump = Raster::filled(h, w, false);
        let mut kink = Raster::filled(h, w, false);
        for u in 0..h {
            for v in 0..w {
                for (du, dv) in [(1, 0), (0, 1)] {
                    let (a, b) = (u + du, v + dv);
                    if a >= h || b >= w {
                        continue;
                    }
                    let (gi, gj) = if du == 1 {
                        (self.p.at(u, v), self.p.at(a, b))
                    } else {
                        (self.q.at(u, v), self.q.at(a, b))
                    };
                    let predicted = 0.5 * (gi + gj);
                    let dz = self.depth.at(a, b) - self.depth.at(u, v);
                    let target = if (dz - predicted).abs() > JUMP_THRESHOLD {
                        &mut jump
                    } else if (self.p.at(a, b) - self.p.at(u, v)).hypot(self.q.at(a, b) - self.q.at(u, v)) > KINK_THRESHOLD {
                        &mut kink
                    } else {
                        continue;
                    };
                    target.set(u, v, true);
                    target.set(a, b, true);
                }
            }
        }
        FeatureBands { jump, kink }
    }

    pub fn depth_range(&self) -> f64 {
        let vals = self.depth.as_slice();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}
