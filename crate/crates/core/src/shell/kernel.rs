//! Quadrature-point energy kernels shared by plain and enriched elements.
//!
//! An element is a list of generalized nodes `y_k` (positions, then
//! enrichment coordinates) with per-point rest gradients `g_k = ∂S_k/∂X`.
//! `F = Σ y_k ⊗ g_k`, `U = Σ W Ψ(F)`, `∂U/∂y_k = Σ W P g_k`.

use num_dual::DualNum;

use crate::error::{Error, Result};

use super::material::{Material, Phase};
use super::shape::prism_shape;

/// Scalar usable by the generic kernels: `f64` or a forward dual number.
pub trait Real: DualNum<Primitive = f64> + Copy + Send + Sync {}
impl<T: DualNum<Primitive = f64> + Copy + Send + Sync> Real for T {}

pub type M3<T> = [[T; 3]; 3];

pub fn det3<T: Real>(m: &M3<T>) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Inverse given the precomputed determinant.
pub fn inv3<T: Real>(m: &M3<T>, det: T) -> M3<T> {
    let c = |i: usize, j: usize| {
        let (i1, i2) = ((i + 1) % 3, (i + 2) % 3);
        let (j1, j2) = ((j + 1) % 3, (j + 2) % 3);
        m[i1][j1] * m[i2][j2] - m[i1][j2] * m[i2][j1]
    };
    let inv_det = det.recip();
    let mut out = [[T::from(0.0); 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = c(j, i) * inv_det;
        }
    }
    out
}

/// Material pair indexed by [`Phase::index`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Materials {
    pub soft: Material,
    pub stiff: Material,
}

impl Materials {
    pub fn get(&self, phase: Phase) -> &Material {
        match phase {
            Phase::Soft => &self.soft,
            Phase::Stiff => &self.stiff,
        }
    }
}

/// One integration point: `weight = w_j |det ∂X/∂q|`, `grads[k] = ∂S_k/∂X`.
#[derive(Debug, Clone)]
pub struct QuadPoint<T = f64> {
    pub weight: T,
    pub grads: Vec<[T; 3]>,
    pub phase: Phase,
}

/// Rest Jacobian `J[i][d] = ∂X_i/∂q_d` of a prism at `q` with its
/// determinant and `∂N/∂X`.
pub fn rest_gradients<T: Real>(rest: &[[f64; 3]; 6], q: [T; 3]) -> Option<(T, [T; 6], [[T; 3]; 6])> {
    let s = prism_shape(q);
    let mut j = [[T::from(0.0); 3]; 3];
    for (k, x) in rest.iter().enumerate() {
        for i in 0..3 {
            for d in 0..3 {
                j[i][d] += s.dn[k][d] * x[i];
            }
        }
    }
    let det = det3(&j);
    if !(det.re() > 0.0) {
        return None;
    }
    let ji = inv3(&j, det);
    let mut g = [[T::from(0.0); 3]; 6];
    for k in 0..6 {
        // ∂N/∂X = J^{-T} ∂N/∂q
        for i in 0..3 {
            g[k][i] = s.dn[k][0] * ji[0][i] + s.dn[k][1] * ji[1][i] + s.dn[k][2] * ji[2][i];
        }
    }
    Some((det, s.n, g))
}

fn deformation<T: Real>(qp: &QuadPoint<T>, y: &[[T; 3]]) -> M3<T> {
    let mut f = [[T::from(0.0); 3]; 3];
    for (yk, gk) in y.iter().zip(&qp.grads) {
        for i in 0..3 {
            for d in 0..3 {
                f[i][d] += yk[i] * gk[d];
            }
        }
    }
    f
}

/// Energy and gradient with respect to every generalized node.
pub fn energy_gradient<T: Real>(
    qps: &[QuadPoint<T>],
    y: &[[T; 3]],
    mats: &Materials,
) -> Result<(T, Vec<[T; 3]>)> {
    let mut u = T::from(0.0);
    let mut grad = vec![[T::from(0.0); 3]; y.len()];
    for qp in qps {
        debug_assert_eq!(qp.grads.len(), y.len());
        let f = deformation(qp, y);
        let (psi, p) = mats.get(qp.phase).energy_stress(&f).ok_or(Error::ElementInversion { element: None })?;
        u += psi * qp.weight;
        for (gk, out) in qp.grads.iter().zip(grad.iter_mut()) {
            for i in 0..3 {
                out[i] += (p[i][0] * gk[0] + p[i][1] * gk[1] + p[i][2] * gk[2]) * qp.weight;
            }
        }
    }
    Ok((u, grad))
}

/// Energy only.
pub fn energy<T: Real>(qps: &[QuadPoint<T>], y: &[[T; 3]], mats: &Materials) -> Result<T> {
    let mut u = T::from(0.0);
    for qp in qps {
        let f = deformation(qp, y);
        let (psi, _) = mats.get(qp.phase).energy_stress(&f).ok_or(Error::ElementInversion { element: None })?;
        u += psi * qp.weight;
    }
    Ok(u)
}

/// Dense row-major Hessian of size `3n × 3n`, index `3k + i`.
pub fn hessian(qps: &[QuadPoint<f64>], y: &[[f64; 3]], mats: &Materials) -> Result<Vec<f64>> {
    let n = 3 * y.len();
    let mut h = vec![0.0; n * n];
    for qp in qps {
        let f = deformation(qp, y);
        let t = mats.get(qp.phase).tangent(&f).ok_or(Error::ElementInversion { element: None })?;
        // tg[(i, l, b)] = Σ_a T[3i+a][3l+b] g_k[a] is formed per node k
        for (k, gk) in qp.grads.iter().enumerate() {
            let mut tg = [[0.0; 9]; 3];
            for i in 0..3 {
                for lb in 0..9 {
                    tg[i][lb] = (0..3).map(|a| t[3 * i + a][lb] * gk[a]).sum::<f64>() * qp.weight;
                }
            }
            for (l, gl) in qp.grads.iter().enumerate() {
                for i in 0..3 {
                    let row = (3 * k + i) * n + 3 * l;
                    for jj in 0..3 {
                        h[row + jj] += tg[i][3 * jj] * gl[0] + tg[i][3 * jj + 1] * gl[1] + tg[i][3 * jj + 2] * gl[2];
                    }
                }
            }
        }
    }
    Ok(h)
}
