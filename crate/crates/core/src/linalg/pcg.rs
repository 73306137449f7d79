use super::{build_preconditioner, Preconditioner, SolverConfig};
use crate::error::{Error, Result};
use crate::sparse::{dot, norm2, SparseMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual, or absolute residual when `‖b‖ = 0`.
    pub residual: f64,
}

/// Outcome of [`pcg_with`]: the last iterate whether or not the tolerance was met.
#[derive(Debug, Clone, PartialEq)]
pub struct CgRun {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    /// Iterate with the smallest residual seen.
    pub best: Vec<f64>,
    pub best_residual: f64,
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Preconditioned conjugate gradient from `x0`, stopping when
/// `‖b − Ax‖ ≤ tol·‖b‖` (or `≤ tol` if `b = 0`).
///
/// Convergence of the recursive residual is confirmed against the true
/// residual; on disagreement the recursion restarts from the true residual.
pub fn pcg_with(
    a: &SparseMatrix,
    b: &[f64],
    x0: &[f64],
    m: &dyn Preconditioner,
    tol: f64,
    max_iterations: usize,
) -> CgRun {
    let n = b.len();
    assert_eq!(a.nrows(), n);
    assert_eq!(x0.len(), n);
    let bnorm = norm2(b);
    let scale = if bnorm > 0.0 { bnorm } else { 1.0 };
    let mut x = x0.to_vec();
    let mut r = b.to_vec();
    let ax = a.matvec(&x);
    for i in 0..n {
        r[i] -= ax[i];
    }
    let mut res = norm2(&r) / scale;
    let mut best = x.clone();
    let mut best_residual = res;
    if res <= tol {
        return CgRun {
            x,
            iterations: 0,
            residual: res,
            converged: true,
            best,
            best_residual,
        };
    }
    let mut z = vec![0.0; n];
    m.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) || !rz.is_finite() {
            break;
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        iterations += 1;
        res = norm2(&r) / scale;
        if res <= tol {
            let ax = a.matvec(&x);
            for i in 0..n {
                r[i] = b[i] - ax[i];
            }
            res = norm2(&r) / scale;
            if res <= tol {
                converged = true;
                if res < best_residual {
                    best_residual = res;
                    best.copy_from_slice(&x);
                }
                break;
            }
            m.apply(&r, &mut z);
            p.copy_from_slice(&z);
            rz = dot(&r, &z);
            continue;
        }
        if res < best_residual {
            best_residual = res;
            best.copy_from_slice(&x);
        }
        m.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    CgRun {
        x,
        iterations,
        residual: res,
        converged,
        best,
        best_residual,
    }
}

/// Unpreconditioned CG that returns its final iterate even without
/// convergence. From a warm start every CG step decreases `½xᵀAx − bᵀx`,
/// which the alternating schemes rely on.
pub fn cg_iterate(a: &SparseMatrix, b: &[f64], x0: &[f64], tol: f64, max_iterations: usize) -> CgRun {
    pcg_with(a, b, x0, &super::precond::Identity, tol, max_iterations)
}

/// Solves `A x = b` by PCG with the preconditioner selected in `cfg`.
pub fn pcg_solve(a: &SparseMatrix, b: &[f64], x0: &[f64], cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if a.nrows() != b.len() || a.ncols() != b.len() || x0.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} system with rhs of length {} and guess of length {}",
            a.nrows(),
            a.ncols(),
            b.len(),
            x0.len()
        )));
    }
    let m = build_preconditioner(cfg.preconditioner, a);
    let run = pcg_with(a, b, x0, m.as_ref(), cfg.rel_tolerance, cfg.max_iterations);
    if run.converged {
        Ok(SolveReport {
            x: run.x,
            iterations: run.iterations,
            residual: run.residual,
        })
    } else {
        Err(Error::NotConverged {
            iterations: run.iterations,
            residual: run.best_residual,
            best: run.best,
        })
    }
}
