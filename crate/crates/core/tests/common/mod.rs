#![allow(dead_code)]

use normint::domain::{Domain, DomainMask};
use normint::fields::{GradientField, PriorField};
use normint::linalg::SolverConfig;
use normint::noise::NoiseModel;
use normint::operators::Discretization;
use normint::quadratic::integrate_quadratic;
use normint::synthetic::{generate_surface, SurfaceKind, SurfaceParams, SyntheticSurface};
use rand::Rng;

/// The eight-pixel L-shaped domain: a 3×3 square without its (2, 2) corner.
pub fn corner_domain() -> Domain {
    Domain::new(DomainMask::from_fn(3, 3, |u, v| !(u == 2 && v == 2)).unwrap()).unwrap()
}

/// Random mask with roughly `fill` of the pixels inside; never empty.
pub fn random_mask(rng: &mut impl Rng, h: usize, w: usize, fill: f64) -> DomainMask {
    let mut inside: Vec<bool> = (0..h * w).map(|_| rng.random_bool(fill)).collect();
    inside[rng.random_range(0..h * w)] = true;
    DomainMask::from_fn(h, w, |u, v| inside[u * w + v]).unwrap()
}

pub fn random_vec(rng: &mut impl Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

/// A synthetic problem on a given domain.
pub struct Problem {
    pub surface: SyntheticSurface,
    pub disc: Discretization,
    pub g: GradientField,
    pub truth: Vec<f64>,
    pub prior: PriorField,
}

impl Problem {
    pub fn quadratic(&self) -> Vec<f64> {
        integrate_quadratic(&self.disc, &self.g, &self.prior, &SolverConfig::default())
            .unwrap()
            .depth
            .z
    }
}

pub fn problem(kind: SurfaceKind, n: usize, params: SurfaceParams, sigma: f64, seed: u64, masked: bool) -> Problem {
    let surface = generate_surface(kind, n, params).unwrap();
    let (mut p, mut q) = (surface.p.clone(), surface.q.clone());
    NoiseModel::new(sigma, seed).unwrap().apply(&mut p, &mut q).unwrap();
    let mask = if masked {
        surface.object.clone()
    } else {
        DomainMask::full(n, n).unwrap()
    };
    let disc = Discretization::from_mask(mask).unwrap();
    let g = GradientField::from_rasters(&disc.domain, &p, &q).unwrap();
    let truth = disc.domain.gather(&surface.depth).unwrap();
    let prior = PriorField::default_for(disc.len());
    Problem {
        surface,
        disc,
        g,
        truth,
        prior,
    }
}

/// Dense finite-difference matrices on a full `h × w` grid, column-major,
/// in the order u+, u−, v+, v−. Rows without the needed neighbour are zero.
pub fn dense_differences(h: usize, w: usize) -> [Vec<Vec<f64>>; 4] {
    let n = h * w;
    let mut out: [Vec<Vec<f64>>; 4] = std::array::from_fn(|_| vec![vec![0.0; n]; n]);
    for v in 0..w {
        for u in 0..h {
            let i = v * h + u;
            if u + 1 < h {
                out[0][i][i] = -1.0;
                out[0][i][i + 1] = 1.0;
            }
            if u >= 1 {
                out[1][i][i] = 1.0;
                out[1][i][i - 1] = -1.0;
            }
            if v + 1 < w {
                out[2][i][i] = -1.0;
                out[2][i][i + h] = 1.0;
            }
            if v >= 1 {
                out[3][i][i] = 1.0;
                out[3][i][i - h] = -1.0;
            }
        }
    }
    out
}

pub fn dense_matvec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// `Dᵀ diag(w) D` and `Dᵀ diag(w) d` accumulated into `a` and `b`.
pub fn dense_accumulate(a: &mut [Vec<f64>], b: &mut [f64], d: &[Vec<f64>], w: &[f64], data: &[f64]) {
    let n = b.len();
    for r in 0..n {
        if d[r].iter().all(|&x| x == 0.0) {
            continue;
        }
        for i in 0..n {
            if d[r][i] == 0.0 {
                continue;
            }
            b[i] += d[r][i] * w[r] * data[r];
            for j in 0..n {
                a[i][j] += d[r][i] * w[r] * d[r][j];
            }
        }
    }
}

/// Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// 8×8 checkerboard of `block`-pixel squares, each carrying a smooth shading
/// that vanishes on its border, plus σ = 1 graylevel noise.
pub fn shaded_checkerboard(block: usize, seed: u64) -> normint::raster::Raster<[f64; 3]> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let n = 8 * block;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let bump = |x: usize| (std::f64::consts::PI * ((x % block) as f64 + 0.5) / block as f64).sin().powi(2);
    normint::raster::Raster::from_fn(n, n, |u, v| {
        let base = if (u / block + v / block) % 2 == 0 { [60.0, 90.0, 160.0] } else { [190.0, 150.0, 40.0] };
        let shade = 40.0 * bump(u) * bump(v);
        base.map(|x| x + shade + noise.sample(&mut rng))
    })
}

/// Sum over blocks and channels of the within-block variance.
pub fn block_variance(img: &normint::raster::Raster<[f64; 3]>, block: usize) -> f64 {
    let (h, w) = img.shape();
    let mut total = 0.0;
    for bu in 0..h / block {
        for bv in 0..w / block {
            for c in 0..3 {
                let x: Vec<f64> = (0..block * block)
                    .map(|k| img.at(bu * block + k / block, bv * block + k % block)[c])
                    .collect();
                let m = x.iter().sum::<f64>() / x.len() as f64;
                total += x.iter().map(|y| (y - m).powi(2)).sum::<f64>() / x.len() as f64;
            }
        }
    }
    total
}

/// Largest channel error over the control points.
pub fn control_error(input: &normint::raster::Raster<[f64; 3]>, out: &normint::flatten::Flattened) -> f64 {
    let mut worst = 0.0f64;
    for (k, &on) in out.control.as_slice().iter().enumerate() {
        if on {
            for c in 0..3 {
                worst = worst.max((out.image.as_slice()[k][c] - input.as_slice()[k][c]).abs());
            }
        }
    }
    worst
}
