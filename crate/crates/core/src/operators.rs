//! Finite-difference operators on a masked domain and the quadratic system
//! `A z = b`.

use crate::domain::{Direction, DirectionPair, Domain};
use crate::error::Result;
use crate::fields::{GradientField, PriorField};
use crate::sparse::SparseMatrix;

/// The four directional difference matrices `D_u^+, D_u^-, D_v^+, D_v^-`.
#[derive(Debug, Clone)]
pub struct DiffMatrices {
    mats: [SparseMatrix; 4],
}

impl DiffMatrices {
    pub fn get(&self, dir: Direction) -> &SparseMatrix {
        &self.mats[dir.slot()]
    }

    pub fn u_plus(&self) -> &SparseMatrix {
        self.get(Direction::UPlus)
    }

    pub fn u_minus(&self) -> &SparseMatrix {
        self.get(Direction::UMinus)
    }

    pub fn v_plus(&self) -> &SparseMatrix {
        self.get(Direction::VPlus)
    }

    pub fn v_minus(&self) -> &SparseMatrix {
        self.get(Direction::VMinus)
    }
}

/// Row `i` of a forward matrix is `-1` at `i` and `+1` at the neighbour; a
/// backward matrix has `+1` at `i` and `-1` at the neighbour. Rows of pixels
/// whose neighbour is outside are zero.
pub fn build_diff_matrices(domain: &Domain) -> DiffMatrices {
    let n = domain.len();
    let sub = domain.subdomains();
    let mats = Direction::ALL.map(|dir| {
        let mut t = Vec::with_capacity(2 * n);
        for i in 0..n {
            if let Some(j) = sub.neighbor(dir, i) {
                let s = if dir.is_forward() { 1.0 } else { -1.0 };
                t.push((i, i, -s));
                t.push((i, j, s));
            }
        }
        SparseMatrix::from_triplets(n, n, t)
    });
    DiffMatrices { mats }
}

/// `D_u = ½(D_u^+ᵀ + D_u^-ᵀ)` and `D_v = ½(D_v^+ᵀ + D_v^-ᵀ)`.
pub fn build_divergence_pair(diff: &DiffMatrices) -> (SparseMatrix, SparseMatrix) {
    let half = |a: &SparseMatrix, b: &SparseMatrix| a.transpose().linear_combination(0.5, &b.transpose(), 0.5);
    (
        half(diff.u_plus(), diff.u_minus()),
        half(diff.v_plus(), diff.v_minus()),
    )
}

/// `L = ½ Σ Dᵀ D` over the four directions.
pub fn build_laplacian(diff: &DiffMatrices) -> SparseMatrix {
    let n = diff.u_plus().nrows();
    let half = vec![0.5; n];
    let mut l = SparseMatrix::zeros(n, n);
    for dir in Direction::ALL {
        l = l.add(&diff.get(dir).weighted_gram(&half));
    }
    l
}

/// Keeps only the rows of `m` flagged in `keep`.
fn restrict_rows(m: &SparseMatrix, keep: impl Fn(usize) -> bool) -> SparseMatrix {
    let mut t = Vec::new();
    for r in 0..m.nrows() {
        if keep(r) {
            let (cols, vals) = m.row(r);
            t.extend(cols.iter().zip(vals).map(|(&c, &v)| (r, c, v)));
        }
    }
    SparseMatrix::from_triplets(m.nrows(), m.ncols(), t)
}

/// All operators for one mask. Assembled once and shared by every method.
#[derive(Debug, Clone)]
pub struct SparseOperatorSet {
    pub diff: DiffMatrices,
    pub d_u: SparseMatrix,
    pub d_v: SparseMatrix,
    pub laplacian: SparseMatrix,
    /// `D_u^U` and `D_v^V` with rows kept only on `Ω^{UV}`, indexed by
    /// [`DirectionPair::slot`].
    pair_u: [SparseMatrix; 4],
    pair_v: [SparseMatrix; 4],
}

impl SparseOperatorSet {
    pub fn new(domain: &Domain) -> Self {
        let diff = build_diff_matrices(domain);
        let (d_u, d_v) = build_divergence_pair(&diff);
        let laplacian = build_laplacian(&diff);
        let sub = domain.subdomains();
        let pair_u = DirectionPair::ALL.map(|pair| restrict_rows(diff.get(pair.u), |i| sub.pair_contains(pair, i)));
        let pair_v = DirectionPair::ALL.map(|pair| restrict_rows(diff.get(pair.v), |i| sub.pair_contains(pair, i)));
        Self {
            diff,
            d_u,
            d_v,
            laplacian,
            pair_u,
            pair_v,
        }
    }

    pub fn len(&self) -> usize {
        self.laplacian.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d(&self, dir: Direction) -> &SparseMatrix {
        self.diff.get(dir)
    }

    /// `(D_u^U, D_v^V)` restricted to the rows of `Ω^{UV}`.
    pub fn pair(&self, pair: DirectionPair) -> (&SparseMatrix, &SparseMatrix) {
        (&self.pair_u[pair.slot()], &self.pair_v[pair.slot()])
    }

    /// `Λ²` as a diagonal matrix.
    pub fn lambda_sq(&self, prior: &PriorField) -> SparseMatrix {
        SparseMatrix::diagonal_matrix(&prior.lambda)
    }
}

/// A domain together with its operators.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub domain: Domain,
    pub ops: SparseOperatorSet,
}

impl Discretization {
    pub fn new(domain: Domain) -> Self {
        let ops = SparseOperatorSet::new(&domain);
        Self { domain, ops }
    }

    pub fn from_mask(mask: crate::domain::DomainMask) -> Result<Self> {
        Ok(Self::new(Domain::new(mask)?))
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }
}

/// `A = L + Λ²`, `b = D_u p + D_v q + Λ² z⁰`.
pub fn build_quadratic_system(
    ops: &SparseOperatorSet,
    g: &GradientField,
    prior: &PriorField,
) -> Result<(SparseMatrix, Vec<f64>)> {
    let n = ops.len();
    g.check_len(n)?;
    prior.check_len(n)?;
    prior.validate()?;
    let a = ops.laplacian.add_diagonal(&prior.lambda);
    let a = a.into_symmetric()?;
    let mut b = ops.d_u.matvec(&g.p);
    let bq = ops.d_v.matvec(&g.q);
    for i in 0..n {
        b[i] += bq[i] + prior.lambda[i] * prior.z0[i];
    }
    Ok((a, b))
}

/// Discrete least-squares energy
/// `½Σ_u ‖D_u^± z − p‖² + ½Σ_v ‖D_v^± z − q‖² + ‖Λ(z − z⁰)‖²`, with the
/// residual taken as zero on rows outside each sub-domain.
pub fn quadratic_energy(ops: &SparseOperatorSet, g: &GradientField, prior: &PriorField, z: &[f64]) -> f64 {
    let mut e = 0.0;
    for dir in Direction::ALL {
        let d = ops.d(dir);
        let dz = d.matvec(z);
        let data = if dir.is_u() { &g.p } else { &g.q };
        for i in 0..z.len() {
            if d.row_nnz(i) > 0 {
                let r = dz[i] - data[i];
                e += 0.5 * r * r;
            }
        }
    }
    for i in 0..z.len() {
        let r = z[i] - prior.z0[i];
        e += prior.lambda[i] * r * r;
    }
    e
}
