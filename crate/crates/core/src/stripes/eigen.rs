use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dense_symmetric_eigen, frobenius, norm, spmv, SpdSolver};

use super::matrices::StripeMatrices;

/// Eigenvalue gap below which the eigenplane is reported as degenerate.
pub const DEGENERATE_GAP: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Problems of dimension up to this are solved densely.
    pub dense_limit: usize,
    pub block: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { dense_limit: 4000, block: 6, tol: 1e-10, max_iter: 500, seed: 0x5eed }
    }
}

/// Smallest generalized eigenvalue and a B-orthonormal basis of its plane.
///
/// `v2` is the per-vertex quarter rotation of `v1`, which is an exact
/// eigenvector for the same eigenvalue.
#[derive(Debug, Clone)]
pub struct Eigenplane {
    pub lambda: f64,
    /// The three smallest eigenvalues, ascending.
    pub lambdas: [f64; 3],
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    /// Set when the third eigenvalue coincides with the first.
    pub degenerate: bool,
}

/// Per-vertex quarter rotation `(a, b) → (−b, a)`.
pub fn quarter_rotation(v: &[f64]) -> Vec<f64> {
    v.chunks_exact(2).flat_map(|p| [-p[1], p[0]]).collect()
}

pub fn solve_eigenplane(m: &StripeMatrices) -> Result<Eigenplane> {
    solve_eigenplane_with(m, &EigenOptions::default())
}

pub fn solve_eigenplane_with(m: &StripeMatrices, opts: &EigenOptions) -> Result<Eigenplane> {
    let n = m.dim();
    if n < 6 {
        return Err(Error::Eigen("need at least three vertices".into()));
    }
    if m.b.iter().any(|&b| !(b > 0.0)) {
        return Err(Error::Eigen("mass matrix is not positive".into()));
    }
    let (lambdas, mut v1) = if n <= opts.dense_limit { dense(m)? } else { subspace(m, opts)? };
    let s = m.b_norm2(&v1).sqrt();
    v1.iter_mut().for_each(|x| *x /= s);
    let v2 = quarter_rotation(&v1);
    let degenerate = lambdas[2] - lambdas[0] < DEGENERATE_GAP;
    if degenerate {
        log::warn!(
            "eigenplane is degenerate: third eigenvalue {} within {DEGENERATE_GAP:e} of {}",
            lambdas[2],
            lambdas[0]
        );
    }
    Ok(Eigenplane { lambda: lambdas[0], lambdas, v1, v2, degenerate })
}

fn dense(m: &StripeMatrices) -> Result<([f64; 3], Vec<f64>)> {
    let n = m.dim();
    let s: Vec<f64> = m.b.iter().map(|b| 1.0 / b.sqrt()).collect();
    let mut c = Mat::<f64>::zeros(n, n);
    for &(r, col, v) in &m.a_entries {
        c[(r, col)] += v * s[r] * s[col];
    }
    let (vals, vecs) = dense_symmetric_eigen(&c)?;
    let v1 = (0..n).map(|i| vecs[(i, 0)] * s[i]).collect();
    Ok(([vals[0], vals[1], vals[2]], v1))
}

/// Shift-invert block subspace iteration with Rayleigh–Ritz in the B inner
/// product. A block (rather than a single Krylov vector) resolves the
/// two-fold eigenvalue reliably.
fn subspace(m: &StripeMatrices, opts: &EigenOptions) -> Result<([f64; 3], Vec<f64>)> {
    let n = m.dim();
    let k = opts.block.max(4).min(n);
    let trace_a: f64 = m.a_entries.iter().filter(|e| e.0 == e.1).map(|e| e.2).sum();
    let trace_b: f64 = m.b.iter().sum();
    let delta = 1e-6 * trace_a / trace_b + f64::MIN_POSITIVE;
    let mut shifted = m.a_entries.clone();
    shifted.extend(m.b.iter().enumerate().map(|(i, b)| (i, i, delta * b)));
    let solver = SpdSolver::new(n, &shifted)?;
    let a_norm = frobenius(&m.a);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut x: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    for _ in 0..opts.max_iter {
        let mut y: Vec<Vec<f64>> = x
            .iter()
            .map(|xi| {
                let bx: Vec<f64> = xi.iter().zip(&m.b).map(|(a, b)| a * b).collect();
                solver.solve(&bx)
            })
            .collect();
        b_orthonormalize(m, &mut y)?;
        let ay: Vec<Vec<f64>> = y.iter().map(|yi| spmv(&m.a, yi)).collect();
        let h = Mat::from_fn(k, k, |i, j| crate::linalg::dot(&y[i], &ay[j]));
        let h = Mat::from_fn(k, k, |i, j| 0.5 * (h[(i, j)] + h[(j, i)]));
        let (theta, u) = dense_symmetric_eigen(&h)?;
        x = (0..k)
            .map(|c| (0..n).map(|r| (0..k).map(|j| y[j][r] * u[(j, c)]).sum()).collect())
            .collect();
        let converged = (0..3).all(|c| {
            let ax = spmv(&m.a, &x[c]);
            let res: Vec<f64> = ax.iter().zip(&x[c]).zip(&m.b).map(|((a, xv), b)| a - theta[c] * b * xv).collect();
            norm(&res) <= opts.tol * a_norm.max(1.0)
        });
        if converged {
            return Ok(([theta[0], theta[1], theta[2]], x.swap_remove(0)));
        }
    }
    Err(Error::Eigen(format!("subspace iteration did not converge in {} iterations", opts.max_iter)))
}

fn b_orthonormalize(m: &StripeMatrices, y: &mut [Vec<f64>]) -> Result<()> {
    for i in 0..y.len() {
        for _ in 0..2 {
            for j in 0..i {
                let c = m.b_dot(&y[i], &y[j]);
                let (head, tail) = y.split_at_mut(i);
                tail[0].iter_mut().zip(&head[j]).for_each(|(a, b)| *a -= c * b);
            }
        }
        let s = m.b_norm2(&y[i]).sqrt();
        if !(s > 1e-300) {
            return Err(Error::Eigen("subspace collapsed".into()));
        }
        y[i].iter_mut().for_each(|a| *a /= s);
    }
    Ok(())
}

/// `‖Av − λBv‖`.
pub fn residual_norm(m: &StripeMatrices, lambda: f64, v: &[f64]) -> f64 {
    let av = spmv(&m.a, v);
    let r: Vec<f64> = av.iter().zip(v).zip(&m.b).map(|((a, x), b)| a - lambda * b * x).collect();
    norm(&r)
}
