//! Compressible Neo-Hookean density with optional stiffening fibers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Mat3;

use super::kernel::{det3, inv3, Real, M3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fiber {
    /// Fiber stiffness `β_f` (Pa).
    pub beta: f64,
    /// Unit fiber direction in rest coordinates.
    pub dir: [f64; 3],
}

/// `Ψ = ½[μ(tr C − 3) − 2μ ln J + λ(ln J)²] + ½β nᵀCn`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub mu: f64,
    pub lambda: f64,
    #[serde(default)]
    pub fiber: Option<Fiber>,
}

/// Which side of the interface a region belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Soft,
    Stiff,
}

impl Phase {
    /// Positive level set is stiff.
    pub fn of(phi: f64) -> Self {
        if phi > 0.0 {
            Phase::Stiff
        } else {
            Phase::Soft
        }
    }

    pub fn index(self) -> usize {
        match self {
            Phase::Soft => 0,
            Phase::Stiff => 1,
        }
    }
}

impl Material {
    pub fn new(mu: f64, lambda: f64) -> Self {
        Self { mu, lambda, fiber: None }
    }

    /// Lamé parameters from Young's modulus and Poisson ratio.
    pub fn from_young_poisson(e: f64, nu: f64) -> Self {
        let mu = e / (2.0 * (1.0 + nu));
        let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
        Self::new(mu, lambda)
    }

    pub fn young(&self) -> f64 {
        self.mu * (3.0 * self.lambda + 2.0 * self.mu) / (self.lambda + self.mu)
    }

    pub fn poisson(&self) -> f64 {
        self.lambda / (2.0 * (self.lambda + self.mu))
    }

    pub fn validate(&self) -> Result<()> {
        let fiber_ok = self.fiber.is_none_or(|f| f.beta >= 0.0 && (norm(f.dir) - 1.0).abs() < 1e-9);
        if self.mu > 0.0 && self.lambda >= 0.0 && fiber_ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid material {self:?}")))
        }
    }

    fn fiber_parts(&self) -> (f64, [f64; 3]) {
        self.fiber.map_or((0.0, [0.0; 3]), |f| (f.beta, f.dir))
    }

    /// `Ψ(C)` and `∂Ψ/∂C` from the right Cauchy–Green tensor.
    pub fn density(&self, c: &Mat3) -> Result<(f64, Mat3)> {
        let det = c.determinant();
        if !(det > 0.0) {
            return Err(Error::ElementInversion { element: None });
        }
        let ln_j = 0.5 * det.ln();
        let (beta, n) = self.fiber_parts();
        let n = crate::Vec3::new(n[0], n[1], n[2]);
        let psi = 0.5 * (self.mu * (c.trace() - 3.0) - 2.0 * self.mu * ln_j + self.lambda * ln_j * ln_j)
            + 0.5 * beta * n.dot(&(c * n));
        let cinv = c.try_inverse().ok_or(Error::ElementInversion { element: None })?;
        let grad = (Mat3::identity() * self.mu - cinv * self.mu + cinv * (self.lambda * ln_j) + n * n.transpose() * beta) * 0.5;
        Ok((psi, grad))
    }

    /// `Ψ(F)` and the first Piola–Kirchhoff stress `P = ∂Ψ/∂F`; `None` if
    /// `det F ≤ 0`.
    pub fn energy_stress<T: Real>(&self, f: &M3<T>) -> Option<(T, M3<T>)> {
        let j = det3(f);
        if !(j.re() > 0.0) {
            return None;
        }
        let finv = inv3(f, j);
        let ln_j = j.ln();
        let (beta, n) = self.fiber_parts();
        let mut tr = T::from(0.0);
        let mut fn_ = [T::from(0.0); 3];
        for i in 0..3 {
            for k in 0..3 {
                tr += f[i][k] * f[i][k];
                fn_[i] += f[i][k] * n[k];
            }
        }
        let fiber = (fn_[0] * fn_[0] + fn_[1] * fn_[1] + fn_[2] * fn_[2]) * (0.5 * beta);
        let psi = (tr - 3.0) * (0.5 * self.mu) - ln_j * self.mu + ln_j * ln_j * (0.5 * self.lambda) + fiber;
        let c = ln_j * self.lambda - self.mu;
        let mut p = [[T::from(0.0); 3]; 3];
        for i in 0..3 {
            for k in 0..3 {
                p[i][k] = f[i][k] * self.mu + c * finv[k][i] + fn_[i] * (beta * n[k]);
            }
        }
        Some((psi, p))
    }

    /// `∂P_ij/∂F_kl` stored at `[3i + j][3k + l]`.
    pub fn tangent(&self, f: &M3<f64>) -> Option<[[f64; 9]; 9]> {
        let j = det3(f);
        if !(j > 0.0) {
            return None;
        }
        let fi = inv3(f, j);
        let ln_j = j.ln();
        let (beta, n) = self.fiber_parts();
        let c = self.lambda * ln_j - self.mu;
        let mut t = [[0.0; 9]; 9];
        for i in 0..3 {
            for jj in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut v = -c * fi[jj][k] * fi[l][i] + self.lambda * fi[jj][i] * fi[l][k];
                        if i == k {
                            v += beta * n[jj] * n[l];
                            if jj == l {
                                v += self.mu;
                            }
                        }
                        t[3 * i + jj][3 * k + l] = v;
                    }
                }
            }
        }
        Some(t)
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fiber_mat() -> Material {
        let d = [0.6, 0.0, 0.8];
        Material { mu: 1.3, lambda: 2.1, fiber: Some(Fiber { beta: 0.7, dir: d }) }
    }

    fn random_f(rng: &mut ChaCha8Rng) -> M3<f64> {
        let mut f = [[0.0; 3]; 3];
        for (i, row) in f.iter_mut().enumerate() {
            for (k, v) in row.iter_mut().enumerate() {
                *v = if i == k { 1.0 } else { 0.0 } + rng.random_range(-0.3..0.3);
            }
        }
        f
    }

    #[test]
    fn rest_state() {
        let m = fiber_mat();
        let (psi, grad) = Material::new(1.0, 1.0).density(&Mat3::identity()).unwrap();
        assert_eq!(psi, 0.0);
        assert!(grad.norm() < 1e-15);
        let (psi, p) = Material::new(1.3, 2.1).energy_stress::<f64>(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(psi, 0.0);
        assert!(p.iter().flatten().all(|v| v.abs() < 1e-15));
        assert!(m.validate().is_ok());
    }

    #[test]
    fn uniaxial_closed_form() {
        let c = Mat3::from_diagonal(&crate::Vec3::new(1.21, 1.0, 1.0));
        let (psi, _) = Material::new(1.0, 1.0).density(&c).unwrap();
        let l = 1.1f64.ln();
        let expect = 0.5 * (0.21 - 2.0 * l + l * l);
        assert!((psi - expect).abs() < 1e-15);
        assert!((psi - 0.014_231_8).abs() < 1e-7);
    }

    #[test]
    fn fiber_term() {
        let m = Material { mu: 1.0, lambda: 1.0, fiber: Some(Fiber { beta: 2.0, dir: [1.0, 0.0, 0.0] }) };
        let c = Mat3::from_diagonal(&crate::Vec3::new(4.0, 1.0, 1.0));
        let (with, _) = m.density(&c).unwrap();
        let (without, _) = Material::new(1.0, 1.0).density(&c).unwrap();
        assert!((with - without - 4.0).abs() < 1e-14);
    }

    #[test]
    fn inversion_rejected() {
        let c = Mat3::from_diagonal(&crate::Vec3::new(-1.0, 1.0, 1.0));
        assert!(matches!(Material::new(1.0, 1.0).density(&c), Err(Error::ElementInversion { .. })));
        assert!(Material::new(1.0, 1.0).energy_stress(&[[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_none());
    }

    #[test]
    fn c_and_f_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = fiber_mat();
        for _ in 0..20 {
            let f = random_f(&mut rng);
            let fm = Mat3::from_fn(|i, k| f[i][k]);
            let (psi_c, dc) = m.density(&(fm.transpose() * fm)).unwrap();
            let (psi_f, p) = m.energy_stress(&f).unwrap();
            assert!((psi_c - psi_f).abs() < 1e-13);
            // P = 2 F ∂Ψ/∂C
            let p2 = fm * dc * 2.0;
            for i in 0..3 {
                for k in 0..3 {
                    assert!((p2[(i, k)] - p[i][k]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn stress_and_tangent_match_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = fiber_mat();
        let h = 1e-6;
        for _ in 0..20 {
            let f = random_f(&mut rng);
            let (_, p) = m.energy_stress(&f).unwrap();
            let t = m.tangent(&f).unwrap();
            for k in 0..3 {
                for l in 0..3 {
                    let (mut fp, mut fm) = (f, f);
                    fp[k][l] += h;
                    fm[k][l] -= h;
                    let (ep, pp) = m.energy_stress(&fp).unwrap();
                    let (em, pm) = m.energy_stress(&fm).unwrap();
                    assert!(((ep - em) / (2.0 * h) - p[k][l]).abs() < 1e-7);
                    for i in 0..3 {
                        for j in 0..3 {
                            let fd = (pp[i][j] - pm[i][j]) / (2.0 * h);
                            assert!((fd - t[3 * i + j][3 * k + l]).abs() < 1e-6);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn young_poisson_roundtrip() {
        let m = Material::from_young_poisson(2e9, 0.3);
        assert!((m.young() - 2e9).abs() < 1e-3);
        assert!((m.poisson() - 0.3).abs() < 1e-14);
    }
}
