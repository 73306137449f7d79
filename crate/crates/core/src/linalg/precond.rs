use crate::sparse::SparseMatrix;

/// Application of `M⁻¹` for a symmetric positive definite `M ≈ A`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub(crate) struct Identity;

impl Preconditioner for Identity {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

/// Diagonal scaling. Zero diagonal entries are left unscaled.
pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &SparseMatrix) -> Self {
        let inv_diag = a
            .diagonal()
            .into_iter()
            .map(|d| if d > 0.0 { 1.0 / d } else { 1.0 })
            .collect();
        Self { inv_diag }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((zi, ri), di) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *zi = ri * di;
        }
    }
}

/// IC(0): Cholesky factor restricted to the lower-triangular pattern of `A`.
///
/// A pivot that would be non-positive (or negligible relative to the original
/// diagonal, as happens on the last pixel of a pure Laplacian) is replaced by
/// the original diagonal entry.
pub struct IncompleteCholesky {
    // row-wise strictly lower part of L
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<f64>,
}

impl IncompleteCholesky {
    pub fn new(a: &SparseMatrix) -> Self {
        let n = a.nrows();
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            let start = indices.len();
            let mut aii = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                if c < i {
                    indices.push(c);
                    values.push(v);
                } else if c == i {
                    aii = v;
                }
            }
            let end = indices.len();
            for k in start..end {
                let j = indices[k];
                // dot of row i and row j over columns < j
                let mut s = 0.0;
                let (mut p, mut q) = (start, indptr[j]);
                let qend = indptr[j + 1];
                while p < k && q < qend {
                    match indices[p].cmp(&indices[q]) {
                        std::cmp::Ordering::Less => p += 1,
                        std::cmp::Ordering::Greater => q += 1,
                        std::cmp::Ordering::Equal => {
                            s += values[p] * values[q];
                            p += 1;
                            q += 1;
                        }
                    }
                }
                values[k] = (values[k] - s) / diag[j];
            }
            let sq: f64 = values[start..end].iter().map(|x| x * x).sum();
            let pivot = aii - sq;
            let floor = 1e-10 * aii.abs();
            diag[i] = if pivot > floor {
                pivot.sqrt()
            } else if aii > 0.0 {
                aii.sqrt()
            } else {
                1.0
            };
            indptr[i + 1] = end;
        }
        Self {
            indptr,
            indices,
            values,
            diag,
        }
    }
}

impl Preconditioner for IncompleteCholesky {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let n = self.diag.len();
        // L y = r
        for i in 0..n {
            let mut s = r[i];
            for k in self.indptr[i]..self.indptr[i + 1] {
                s -= self.values[k] * z[self.indices[k]];
            }
            z[i] = s / self.diag[i];
        }
        // Lᵀ x = y, column-oriented
        for i in (0..n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for k in self.indptr[i]..self.indptr[i + 1] {
                z[self.indices[k]] -= self.values[k] * zi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ic0_is_exact_on_tridiagonal() {
        // no fill-in for a tridiagonal matrix, so IC(0) is the full factor
        let n = 6;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
                t.push((i - 1, i, -1.0));
            }
        }
        let a = SparseMatrix::from_triplets(n, n, t);
        let ic = IncompleteCholesky::new(&a);
        let b: Vec<f64> = (0..n).map(|i| i as f64 - 2.0).collect();
        let mut x = vec![0.0; n];
        ic.apply(&b, &mut x);
        let ax = a.matvec(&x);
        for i in 0..n {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_scales_by_diagonal() {
        let a = SparseMatrix::diagonal_matrix(&[2.0, 4.0]);
        let mut z = vec![0.0; 2];
        Jacobi::new(&a).apply(&[1.0, 1.0], &mut z);
        assert_eq!(z, vec![0.5, 0.25]);
    }
}
