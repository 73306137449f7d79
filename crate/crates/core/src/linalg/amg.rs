//! Smoothed-aggregation algebraic multigrid, used as a CG preconditioner.

use super::cholesky::DenseCholesky;
use super::Preconditioner;
use crate::sparse::SparseMatrix;

const STRENGTH_THETA: f64 = 0.08;
const COARSEST_SIZE: usize = 100;
const MAX_LEVELS: usize = 25;

struct Level {
    a: SparseMatrix,
    inv_diag: Vec<f64>,
    /// Prolongation to this level from the next coarser one.
    p: SparseMatrix,
    r: SparseMatrix,
}

/// Symmetric V(1,1)-cycle with forward Gauss–Seidel before and backward
/// Gauss–Seidel after the coarse correction, so the operator stays symmetric.
pub struct AmgPreconditioner {
    levels: Vec<Level>,
    coarse_a: SparseMatrix,
    coarse: Coarse,
}

/// A coarsest level that is still large means aggregation found no strong
/// couplings (e.g. a diagonally dominant matrix); one symmetric Gauss–Seidel
/// sweep is then both cheap and effective.
enum Coarse {
    Direct(DenseCholesky),
    Smooth(Vec<f64>),
}

fn inverse_diagonal(a: &SparseMatrix) -> Vec<f64> {
    a.diagonal().into_iter().map(|d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect()
}

/// Greedy three-pass aggregation on the strength graph.
fn aggregate(a: &SparseMatrix, diag: &[f64]) -> (Vec<usize>, usize) {
    let n = a.nrows();
    let strong = |i: usize| {
        let (cols, vals) = a.row(i);
        cols.iter()
            .zip(vals)
            .filter(move |&(&j, &v)| j != i && v.abs() >= STRENGTH_THETA * (diag[i] * diag[j]).abs().sqrt())
            .map(|(&j, _)| j)
    };
    const NONE: usize = usize::MAX;
    let mut agg = vec![NONE; n];
    let mut count = 0;
    for i in 0..n {
        if agg[i] != NONE {
            continue;
        }
        if strong(i).all(|j| agg[j] == NONE) {
            agg[i] = count;
            for j in strong(i) {
                agg[j] = count;
            }
            count += 1;
        }
    }
    let pass1 = agg.clone();
    for i in 0..n {
        if agg[i] == NONE {
            if let Some(j) = strong(i).find(|&j| pass1[j] != NONE) {
                agg[i] = pass1[j];
            }
        }
    }
    for i in 0..n {
        if agg[i] == NONE {
            agg[i] = count;
            for j in strong(i) {
                if agg[j] == NONE {
                    agg[j] = count;
                }
            }
            count += 1;
        }
    }
    (agg, count)
}

fn symmetrize(a: &SparseMatrix) -> SparseMatrix {
    a.linear_combination(0.5, &a.transpose(), 0.5)
}

impl AmgPreconditioner {
    pub fn new(a: &SparseMatrix) -> Self {
        let mut levels = Vec::new();
        let mut current = a.clone();
        while current.nrows() > COARSEST_SIZE && levels.len() < MAX_LEVELS {
            let n = current.nrows();
            let diag = current.diagonal();
            let (agg, nc) = aggregate(&current, &diag);
            if nc == 0 || nc * 10 > n * 9 {
                break;
            }
            let p0 = SparseMatrix::from_triplets(n, nc, (0..n).map(|i| (i, agg[i], 1.0)));
            let inv_diag = inverse_diagonal(&current);
            // ω = 4/(3ρ) with ρ bounded by the Gershgorin radius of D⁻¹A
            let rho = (0..n)
                .map(|i| current.row(i).1.iter().map(|v| v.abs()).sum::<f64>() * inv_diag[i])
                .fold(0.0, f64::max)
                .max(1e-300);
            let omega = 4.0 / (3.0 * rho);
            let scaled: Vec<f64> = inv_diag.iter().map(|d| -omega * d).collect();
            let smoother = SparseMatrix::diagonal_matrix(&scaled).matmul(&current);
            let smoother = smoother.add_diagonal(&vec![1.0; n]);
            let p = smoother.matmul(&p0);
            let r = p.transpose();
            let coarse = symmetrize(&r.matmul(&current.matmul(&p)));
            levels.push(Level {
                a: current,
                inv_diag,
                p,
                r,
            });
            current = coarse;
        }
        let coarse = if current.nrows() <= 4 * COARSEST_SIZE {
            Coarse::Direct(DenseCholesky::factor_semidefinite(&current))
        } else {
            Coarse::Smooth(inverse_diagonal(&current))
        };
        Self {
            levels,
            coarse_a: current,
            coarse,
        }
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len() + 1
    }

    fn coarse_solve(&self, b: &[f64], x: &mut [f64]) {
        match &self.coarse {
            Coarse::Direct(f) => f.solve(b, x),
            Coarse::Smooth(inv_diag) => {
                x.iter_mut().for_each(|v| *v = 0.0);
                gauss_seidel(&self.coarse_a, inv_diag, b, x, false);
                gauss_seidel(&self.coarse_a, inv_diag, b, x, true);
            }
        }
    }

    fn cycle(&self, level: usize, b: &[f64], x: &mut [f64]) {
        if level == self.levels.len() {
            self.coarse_solve(b, x);
            return;
        }
        let lv = &self.levels[level];
        let n = b.len();
        x.iter_mut().for_each(|v| *v = 0.0);
        gauss_seidel(&lv.a, &lv.inv_diag, b, x, false);
        let ax = lv.a.matvec(x);
        let res: Vec<f64> = (0..n).map(|i| b[i] - ax[i]).collect();
        let rc = lv.r.matvec(&res);
        let mut xc = vec![0.0; rc.len()];
        self.cycle(level + 1, &rc, &mut xc);
        let corr = lv.p.matvec(&xc);
        for i in 0..n {
            x[i] += corr[i];
        }
        gauss_seidel(&lv.a, &lv.inv_diag, b, x, true);
    }
}

fn gauss_seidel(a: &SparseMatrix, inv_diag: &[f64], b: &[f64], x: &mut [f64], backward: bool) {
    let n = b.len();
    let mut sweep = |i: usize| {
        if inv_diag[i] == 0.0 {
            return;
        }
        let (cols, vals) = a.row(i);
        let mut s = b[i];
        for (&c, &v) in cols.iter().zip(vals) {
            if c != i {
                s -= v * x[c];
            }
        }
        x[i] = s * inv_diag[i];
    };
    if backward {
        (0..n).rev().for_each(&mut sweep);
    } else {
        (0..n).for_each(&mut sweep);
    }
}

impl Preconditioner for AmgPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.cycle(0, r, z);
    }
}

impl std::fmt::Debug for AmgPreconditioner {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sizes: Vec<usize> = self
            .levels
            .iter()
            .map(|l| l.a.nrows())
            .chain(std::iter::once(self.coarse_a.nrows()))
            .collect();
        f.debug_struct("AmgPreconditioner").field("levels", &sizes).finish()
    }
}
