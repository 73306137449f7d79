//! Compressed sparse row matrices with deterministic assembly.

use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Rows per rayon task in [`SparseMatrix::matvec`]; below this the product
/// runs on the calling thread.
const PAR_ROWS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            indptr: vec![0; nrows + 1],
            indices: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal_matrix(&vec![1.0; n])
    }

    pub fn diagonal_matrix(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::from_triplets(n, n, diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
        m.symmetric = true;
        m
    }

    /// Assembles from `(row, col, value)` triplets. Duplicates are summed in
    /// the order they were supplied and exact zeros are dropped, so equal
    /// inputs always give bit-identical matrices.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        for &(r, c, _) in &t {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
        }
        // stable sort keeps the supplied order among duplicates
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values = Vec::with_capacity(t.len());
        let mut k = 0;
        while k < t.len() {
            let (r, c, mut sum) = t[k];
            k += 1;
            while k < t.len() && t[k].0 == r && t[k].1 == c {
                sum += t[k].2;
                k += 1;
            }
            if sum != 0.0 {
                indices.push(c);
                values.push(sum);
                indptr[r + 1] += 1;
            }
        }
        for r in 0..nrows {
            indptr[r + 1] += indptr[r];
        }
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            symmetric: false,
        }
    }

    pub(crate) fn from_csr_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), nrows + 1);
        Self {
            nrows,
            ncols,
            indptr,
            indices,
            values,
            symmetric: false,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn row_nnz(&self, r: usize) -> usize {
        self.indptr[r + 1] - self.indptr[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Whether the symmetry flag is set.
    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Exact entry-wise symmetry check (no tolerance).
    pub fn check_symmetric(&self) -> bool {
        self.nrows == self.ncols && *self == self.transpose().with_flag(self.symmetric)
    }

    /// Sets the symmetry flag after verifying exact symmetry.
    pub fn into_symmetric(mut self) -> Result<Self> {
        if !self.check_symmetric() {
            return Err(Error::InvalidParameter("matrix is not exactly symmetric".into()));
        }
        self.symmetric = true;
        Ok(self)
    }

    fn with_flag(mut self, symmetric: bool) -> Self {
        self.symmetric = symmetric;
        self
    }

    /// `y = A x`. Each row is summed sequentially, so the result does not
    /// depend on the number of threads.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        let row = |r: usize| {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.indices[k]];
            }
            s
        };
        if self.nrows >= 2 * PAR_ROWS {
            y.par_chunks_mut(PAR_ROWS).enumerate().for_each(|(chunk, ys)| {
                let base = chunk * PAR_ROWS;
                for (k, yk) in ys.iter_mut().enumerate() {
                    *yk = row(base + k);
                }
            });
        } else {
            for (r, yr) in y.iter_mut().enumerate() {
                *yr = row(r);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    /// `Aᵀ x` without forming the transpose.
    pub fn transpose_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for r in 0..self.nrows {
            let xr = x[r];
            if xr == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        y
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.ncols {
            counts[c + 1] += counts[c];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                indices[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            indptr,
            indices,
            values,
            symmetric: self.symmetric,
        }
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.ncols, other.nrows);
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut pattern = Vec::new();
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for r in 0..self.nrows {
            pattern.clear();
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (ocols, ovals) = other.row(k);
                for (&c, &b) in ocols.iter().zip(ovals) {
                    if mark[c] != r {
                        mark[c] = r;
                        acc[c] = 0.0;
                        pattern.push(c);
                    }
                    acc[c] += a * b;
                }
            }
            pattern.sort_unstable();
            for &c in &pattern {
                if acc[c] != 0.0 {
                    indices.push(c);
                    values.push(acc[c]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        SparseMatrix::from_csr_parts(self.nrows, other.ncols, indptr, indices, values)
    }

    /// `Σ_r w_r · row_rᵀ row_r`, i.e. `Aᵀ diag(w) A`, assembled directly so
    /// the result is exactly symmetric.
    pub fn weighted_gram(&self, weights: &[f64]) -> SparseMatrix {
        assert_eq!(weights.len(), self.nrows);
        let mut t = Vec::new();
        for r in 0..self.nrows {
            let w = weights[r];
            if w == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(r);
            for (&a, &va) in cols.iter().zip(vals) {
                for (&b, &vb) in cols.iter().zip(vals) {
                    t.push((a, b, w * (va * vb)));
                }
            }
        }
        let mut m = SparseMatrix::from_triplets(self.ncols, self.ncols, t);
        m.symmetric = true;
        m
    }

    /// `a·self + b·other`.
    pub fn linear_combination(&self, a: f64, other: &SparseMatrix, b: f64) -> SparseMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.nnz() + other.nnz());
        let mut values = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            let (c1, v1) = self.row(r);
            let (c2, v2) = other.row(r);
            let (mut i, mut j) = (0, 0);
            while i < c1.len() || j < c2.len() {
                let (c, v) = if j >= c2.len() || (i < c1.len() && c1[i] < c2[j]) {
                    i += 1;
                    (c1[i - 1], a * v1[i - 1])
                } else if i >= c1.len() || c2[j] < c1[i] {
                    j += 1;
                    (c2[j - 1], b * v2[j - 1])
                } else {
                    i += 1;
                    j += 1;
                    (c1[i - 1], a * v1[i - 1] + b * v2[j - 1])
                };
                if v != 0.0 {
                    indices.push(c);
                    values.push(v);
                }
            }
            indptr[r + 1] = indices.len();
        }
        let mut m = SparseMatrix::from_csr_parts(self.nrows, self.ncols, indptr, indices, values);
        m.symmetric = self.symmetric && other.symmetric;
        m
    }

    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        self.linear_combination(1.0, other, 1.0)
    }

    pub fn scale(&self, s: f64) -> SparseMatrix {
        let mut m = self.clone();
        for v in &mut m.values {
            *v *= s;
        }
        if s == 0.0 {
            return SparseMatrix::zeros(self.nrows, self.ncols).with_flag(self.symmetric);
        }
        m
    }

    /// Adds `d` to the diagonal.
    pub fn add_diagonal(&self, d: &[f64]) -> SparseMatrix {
        assert_eq!(self.nrows, self.ncols);
        let mut diag = SparseMatrix::diagonal_matrix(d);
        diag.symmetric = true;
        self.add(&diag).with_flag(self.symmetric)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, dr) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                dr[c] = v;
            }
        }
        d
    }

    /// MatrixMarket coordinate text (1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let _ = writeln!(s, "{} {} {:e}", r + 1, c + 1, v);
            }
        }
        s
    }

    pub fn write_matrix_market<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(self.to_matrix_market().as_bytes())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
