use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

/// `L D Lᵀ` factor stored row by row over the envelope (profile) of the lower
/// triangle. Fill-in stays inside the envelope, so the grid orderings used
/// here (bandwidth = image height) factor in `O(n·h²)`.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    first: Vec<usize>,
    offset: Vec<usize>,
    /// unit lower factor, diagonal slots hold 1
    data: Vec<f64>,
    d: Vec<f64>,
}

impl EnvelopeCholesky {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", n, a.ncols())));
        }
        let mut first = vec![0usize; n];
        let mut offset = vec![0usize; n + 1];
        for i in 0..n {
            let (cols, _) = a.row(i);
            first[i] = cols.first().copied().filter(|&c| c < i).unwrap_or(i);
            offset[i + 1] = offset[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offset[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    data[offset[i] + c - first[i]] = v;
                }
            }
        }
        let mut d = vec![0.0; n];
        for i in 0..n {
            let fi = first[i];
            let ri = offset[i];
            // row i first holds g_ij = L_ij·d_j, rescaled to L_ij afterwards
            for j in fi..i {
                let fj = first[j];
                let rj = offset[j];
                let k0 = fi.max(fj);
                let mut s = data[ri + j - fi];
                for k in k0..j {
                    s -= data[ri + k - fi] * data[rj + k - fj];
                }
                data[ri + j - fi] = s;
            }
            let aii = data[ri + i - fi];
            let mut pivot = aii;
            for j in fi..i {
                let g = data[ri + j - fi];
                let l = g / d[j];
                pivot -= g * l;
                data[ri + j - fi] = l;
            }
            let floor = 4.0 * f64::EPSILON * (n as f64) * aii.abs();
            if !(pivot > floor) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite { row: i, pivot });
            }
            d[i] = pivot;
            data[ri + i - fi] = 1.0;
        }
        Ok(Self { first, offset, data, d })
    }

    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let (fi, ri) = (self.first[i], self.offset[i]);
            let mut s = x[i];
            for k in fi..i {
                s -= self.data[ri + k - fi] * x[k];
            }
            x[i] = s;
        }
        for i in 0..n {
            x[i] /= self.d[i];
        }
        for i in (0..n).rev() {
            let (fi, ri) = (self.first[i], self.offset[i]);
            let xi = x[i];
            for k in fi..i {
                x[k] -= self.data[ri + k - fi] * xi;
            }
        }
        x
    }
}

/// Solves an SPD system by envelope Cholesky.
pub fn direct_solve_spd(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "rhs of length {} for {} unknowns",
            b.len(),
            a.nrows()
        )));
    }
    Ok(EnvelopeCholesky::factor(a)?.solve(b))
}

/// Dense Cholesky used on the coarsest multigrid level. Negligible pivots
/// (the constant null space of a pure Laplacian) are dropped, giving a
/// pseudo-solve on that direction.
#[derive(Debug, Clone)]
pub(crate) struct DenseCholesky {
    n: usize,
    l: Vec<f64>,
    active: Vec<bool>,
}

impl DenseCholesky {
    pub(crate) fn factor_semidefinite(a: &SparseMatrix) -> Self {
        let n = a.nrows();
        let mut l = vec![0.0; n * n];
        for (i, row) in a.to_dense().into_iter().enumerate() {
            l[i * n..(i + 1) * n].copy_from_slice(&row);
        }
        let mut active = vec![true; n];
        let scale = (0..n).map(|i| l[i * n + i].abs()).fold(0.0, f64::max);
        for j in 0..n {
            let mut d = l[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 1e-10 * scale {
                active[j] = false;
                for i in j..n {
                    l[i * n + j] = 0.0;
                }
                continue;
            }
            let d = d.sqrt();
            l[j * n + j] = d;
            for i in j + 1..n {
                let mut s = l[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / d;
            }
        }
        Self { n, l, active }
    }

    pub(crate) fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            if !self.active[i] {
                x[i] = 0.0;
                continue;
            }
            let mut s = b[i];
            for k in 0..i {
                s -= self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            if !self.active[i] {
                x[i] = 0.0;
                continue;
            }
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
    }
}
