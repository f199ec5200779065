//! Eigenvector sensitivities through the pinned bordered system.

use crate::error::{Error, Result};
use crate::linalg::{norm, spmv, LuSolver};
use crate::stripes::{field_derivative, quarter_rotation, PinnedEigen, StripeMatrices, StripeSetup};

/// `∂ω_e/∂p`: for each edge, the two (design index, derivative) pairs of
/// its end vertices.
pub fn omega_jacobian(setup: &StripeSetup, p: &[f64]) -> Vec<[(usize, f64); 2]> {
    let full = setup.full_params(p);
    let idx = setup.param_index();
    let mesh = &setup.mesh;
    mesh.edges()
        .iter()
        .map(|e| {
            let [i, j] = e.v;
            let d = mesh.vertex(j) - mesh.vertex(i);
            let di = 0.5 * d.dot(&field_derivative(&setup.frames[i], full[i], setup.frequency));
            let dj = 0.5 * d.dot(&field_derivative(&setup.frames[j], full[j], setup.frequency));
            [(idx[i], di), (idx[j], dj)]
        })
        .collect()
}

fn d_rotation(omega: f64) -> [[f64; 2]; 2] {
    let (s, c) = omega.sin_cos();
    [[-s, -c], [c, -s]]
}

/// `(Σ_e dω_e ∂A/∂ω_e) v` over reduced indices.
pub fn a_action(setup: &StripeSetup, m: &StripeMatrices, d_omega: &[f64], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (e, edge) in setup.mesh.edges().iter().enumerate() {
        let (ri, rj) = (m.vertex_index[edge.v[0]], m.vertex_index[edge.v[1]]);
        let r = d_rotation(m.omega[e]);
        let s = -2.0 * m.weights[e] * d_omega[e];
        for p in 0..2 {
            for q in 0..2 {
                out[2 * rj + p] += s * r[p][q] * v[2 * ri + q];
                out[2 * ri + q] += s * r[p][q] * v[2 * rj + p];
            }
        }
    }
    out
}

/// `yᵀ (∂A/∂ω_e) v` for every edge.
pub fn a_contract(setup: &StripeSetup, m: &StripeMatrices, y: &[f64], v: &[f64]) -> Vec<f64> {
    setup
        .mesh
        .edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let (ri, rj) = (m.vertex_index[edge.v[0]], m.vertex_index[edge.v[1]]);
            let r = d_rotation(m.omega[e]);
            let mut acc = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    acc += r[p][q] * (y[2 * rj + p] * v[2 * ri + q] + y[2 * ri + q] * v[2 * rj + p]);
                }
            }
            -2.0 * m.weights[e] * acc
        })
        .collect()
}

/// Pulls per-edge sensitivities back to design angles.
pub fn chain_to_params(jac: &[[(usize, f64); 2]], per_edge: &[f64], num_params: usize) -> Vec<f64> {
    let mut out = vec![0.0; num_params];
    for (j, g) in jac.iter().zip(per_edge) {
        for &(r, d) in j {
            out[r] += d * g;
        }
    }
    out
}

/// Factorized bordered system
/// `[[A−λB, −Bv, e_k], [−(Bv)ᵀ, 0, 0], [e_kᵀ, 0, 0]]` at a pinned
/// reference eigenvector (`e_k` selects the imaginary part of vertex `k`).
pub struct SensitivitySystem {
    lu: LuSolver,
    n: usize,
    /// Multiplier of the pin constraint, `−[(A−λB)v]_{b_k}`.
    pub mu: f64,
    /// Residuals of the three optimality conditions.
    pub residuals: [f64; 3],
}

impl SensitivitySystem {
    pub fn new(m: &StripeMatrices, pinned: &PinnedEigen) -> Result<Self> {
        let n = m.dim();
        let v = &pinned.v_ref;
        let lambda = pinned.lambda();
        let bk = 2 * pinned.k + 1;
        let bv: Vec<f64> = v.iter().zip(&m.b).map(|(x, b)| x * b).collect();
        let mut entries = m.a_entries.clone();
        entries.extend((0..n).map(|i| (i, i, -lambda * m.b[i])));
        for (i, &x) in bv.iter().enumerate() {
            entries.push((i, n, -x));
            entries.push((n, i, -x));
        }
        entries.push((bk, n + 1, 1.0));
        entries.push((n + 1, bk, 1.0));
        let av = spmv(&m.a, v);
        let mut r: Vec<f64> = av.iter().zip(&bv).map(|(a, b)| a - lambda * b).collect();
        let mu = -r[bk];
        r[bk] += mu;
        let residuals = [norm(&r), (m.b_norm2(v) - 1.0).abs(), v[bk].abs()];
        let lu = LuSolver::new(n + 2, &entries).map_err(|e| Error::Singular(format!("bordered system at pin {}: {e}; re-pin", pinned.k)))?;
        Ok(Self { lu, n, mu, residuals })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves with right-hand side `[r; 0; 0]`, returning `(v-part, λ-part, μ-part)`.
    pub fn solve(&self, r: &[f64]) -> Result<(Vec<f64>, f64, f64)> {
        let mut rhs = r.to_vec();
        rhs.extend([0.0, 0.0]);
        let mut x = self.lu.solve(&rhs).map_err(|e| Error::Singular(format!("{e}; re-pin")))?;
        let (l, mu) = (x[self.n], x[self.n + 1]);
        x.truncate(self.n);
        Ok((x, l, mu))
    }

    /// Tangent `(dv, dλ)` for the design direction `dp`.
    pub fn tangent(&self, setup: &StripeSetup, m: &StripeMatrices, pinned: &PinnedEigen, p: &[f64], dp: &[f64]) -> Result<(Vec<f64>, f64)> {
        let jac = omega_jacobian(setup, p);
        let d_omega: Vec<f64> = jac.iter().map(|j| j.iter().map(|&(r, d)| d * dp[r]).sum()).collect();
        let rhs: Vec<f64> = a_action(setup, m, &d_omega, &pinned.v_ref).iter().map(|x| -x).collect();
        let (dv, dl, _) = self.solve(&rhs)?;
        Ok((dv, dl))
    }

    /// `(∂v/∂p)ᵀ g` by one adjoint solve.
    pub fn adjoint_gradient(&self, setup: &StripeSetup, m: &StripeMatrices, pinned: &PinnedEigen, p: &[f64], g: &[f64]) -> Result<Vec<f64>> {
        let (y, _, _) = self.solve(g)?;
        let per_edge: Vec<f64> = a_contract(setup, m, &y, &pinned.v_ref).iter().map(|x| -x).collect();
        Ok(chain_to_params(&omega_jacobian(setup, p), &per_edge, setup.num_params()))
    }
}

/// Residual of the unpinned system `[[A−λB, −Bv], [−(Bv)ᵀ, 0]]` applied to
/// `[Jv; 0]`; a vanishing value exhibits its null vector.
pub fn unpinned_defect(m: &StripeMatrices, lambda: f64, v: &[f64]) -> f64 {
    let jv = quarter_rotation(v);
    let ajv = spmv(&m.a, &jv);
    let top: Vec<f64> = ajv.iter().zip(&jv).zip(&m.b).map(|((a, x), b)| a - lambda * b * x).collect();
    norm(&top).hypot(m.b_dot(v, &jv)) / norm(&jv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::grid;
    use crate::stripes::{default_pin, pin_reference};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (StripeSetup, Vec<f64>) {
        let s = StripeSetup::new(grid(4, 4, 1.0, 1.0).unwrap(), None, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = (0..s.num_params()).map(|_| rng.random_range(-0.5..0.5)).collect();
        (s, p)
    }

    #[test]
    fn a_derivative_matches_fd() {
        let (s, p) = setup();
        let (_, m) = s.matrices(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..m.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let dp: Vec<f64> = (0..p.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let jac = omega_jacobian(&s, &p);
        let dw: Vec<f64> = jac.iter().map(|j| j.iter().map(|&(r, d)| d * dp[r]).sum()).collect();
        let an = a_action(&s, &m, &dw, &v);
        let h = 1e-6;
        let shifted = |sg: f64| {
            let q: Vec<f64> = p.iter().zip(&dp).map(|(a, b)| a + sg * h * b).collect();
            spmv(&s.matrices(&q).unwrap().1.a, &v)
        };
        let (a, b) = (shifted(1.0), shifted(-1.0));
        for k in 0..v.len() {
            let fd = (a[k] - b[k]) / (2.0 * h);
            assert!((fd - an[k]).abs() < 1e-7 * an[k].abs().max(1.0), "{k}: {fd} vs {}", an[k]);
        }
        // contraction is the transpose of the action
        let y: Vec<f64> = (0..m.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = y.iter().zip(&an).map(|(a, b)| a * b).sum();
        let rhs = chain_to_params(&jac, &a_contract(&s, &m, &y, &v), p.len());
        let rhs: f64 = rhs.iter().zip(&dp).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn bordered_system_is_consistent() {
        let (s, p) = setup();
        let sol = s.solve(&p).unwrap();
        let k = default_pin(&sol.plane);
        let pinned = pin_reference(sol.plane, k).unwrap();
        let sys = SensitivitySystem::new(&sol.matrices, &pinned).unwrap();
        assert!(sys.mu.abs() < 1e-10);
        assert!(sys.residuals.iter().all(|r| *r < 1e-10), "{:?}", sys.residuals);
        assert!(unpinned_defect(&sol.matrices, pinned.lambda(), &pinned.v_ref) < 1e-8);
        let (dv, dl) = sys.tangent(&s, &sol.matrices, &pinned, &p, &vec![0.0; p.len()]).unwrap();
        assert!(dv.iter().all(|x| *x == 0.0) && dl == 0.0);
        let g = sys.adjoint_gradient(&s, &sol.matrices, &pinned, &p, &vec![0.0; sys.dim()]).unwrap();
        assert!(g.iter().all(|x| *x == 0.0));
    }
}
