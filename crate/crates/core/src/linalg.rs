//! Sparse assembly helpers and factorizations on top of faer.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Sparse matrix type used throughout.
pub type SparseMat = SparseColMat<usize, f64>;

/// Builds a sparse matrix, summing duplicate entries.
pub fn sparse_from_triplets(nrows: usize, ncols: usize, entries: &[(usize, usize, f64)]) -> Result<SparseMat> {
    let t: Vec<Triplet<usize, usize, f64>> = entries.iter().map(|&(r, c, v)| Triplet::new(r, c, v)).collect();
    SparseColMat::try_new_from_triplets(nrows, ncols, &t).map_err(|e| Error::LinearAlgebra(format!("{e:?}")))
}

/// `y = M x`.
pub fn spmv(m: &SparseMat, x: &[f64]) -> Vec<f64> {
    assert_eq!(m.ncols(), x.len());
    let mut y = vec![0.0; m.nrows()];
    let col_ptr = m.col_ptr();
    let rows = m.row_idx();
    let vals = m.val();
    for (c, &xc) in x.iter().enumerate() {
        if xc == 0.0 {
            continue;
        }
        for k in col_ptr[c]..col_ptr[c + 1] {
            y[rows[k]] += vals[k] * xc;
        }
    }
    y
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Frobenius norm of a sparse matrix.
pub fn frobenius(m: &SparseMat) -> f64 {
    m.val().iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn solve_with<S: Solve<f64>>(s: &S, rhs: &[f64], transpose: bool) -> Vec<f64> {
    let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
    if transpose {
        s.solve_transpose_in_place(b.as_mut());
    } else {
        s.solve_in_place(b.as_mut());
    }
    (0..rhs.len()).map(|i| b[(i, 0)]).collect()
}

/// Cholesky factorization of a symmetric matrix, with an adaptive diagonal
/// shift when the matrix is not positive definite.
pub struct SpdSolver {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    /// Diagonal shift that made the factorization succeed (0 if none).
    pub shift: f64,
    n: usize,
}

impl SpdSolver {
    /// Factorizes exactly, failing if the matrix is not positive definite.
    pub fn new(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let m = sparse_from_triplets(n, n, entries)?;
        let llt = m
            .sp_cholesky(Side::Lower)
            .map_err(|e| Error::Singular(format!("Cholesky failed: {e:?}")))?;
        Ok(Self { llt, shift: 0.0, n })
    }

    /// Tries the unshifted matrix first, then shifts starting at
    /// `1e-12·trace/n` and growing ×10 up to `max_tries` times.
    pub fn regularized(n: usize, entries: &[(usize, usize, f64)], max_tries: usize) -> Result<Self> {
        if let Ok(s) = Self::new(n, entries) {
            return Ok(s);
        }
        let trace: f64 = entries.iter().filter(|e| e.0 == e.1).map(|e| e.2.abs()).sum();
        let mut shift = 1e-12 * (trace / n.max(1) as f64).max(f64::MIN_POSITIVE);
        let mut shifted = entries.to_vec();
        shifted.extend((0..n).map(|i| (i, i, 0.0)));
        let base = entries.len();
        for _ in 0..max_tries {
            for i in 0..n {
                shifted[base + i].2 = shift;
            }
            if let Ok(mut s) = Self::new(n, &shifted) {
                s.shift = shift;
                return Ok(s);
            }
            shift *= 10.0;
        }
        Err(Error::RegularizationExhausted { shift: shift / 10.0 })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        solve_with(&self.llt, rhs, false)
    }
}

/// Sparse LU for general (indefinite, bordered) systems.
pub struct LuSolver {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl LuSolver {
    pub fn new(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let m = sparse_from_triplets(n, n, entries)?;
        let lu = m.sp_lu().map_err(|e| Error::Singular(format!("LU failed: {e:?}")))?;
        Ok(Self { lu })
    }

    /// Solves `K x = rhs`; a non-finite result signals a singular matrix.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        finite(solve_with(&self.lu, rhs, false))
    }

    /// Solves `Kᵀ x = rhs`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        finite(solve_with(&self.lu, rhs, true))
    }
}

fn finite(x: Vec<f64>) -> Result<Vec<f64>> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular("solution is not finite".into()))
    }
}

/// Eigen-decomposition of a dense symmetric matrix; eigenvalues ascending,
/// eigenvectors as columns.
pub fn dense_symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let vals = (0..s.nrows()).map(|i| s[i]).collect();
    Ok((vals, evd.U().to_owned()))
}
