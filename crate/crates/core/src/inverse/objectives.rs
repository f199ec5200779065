//! Design objectives and regularizers with analytic gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stripes::StripeSetup;
use crate::{Mat3, Vec3};

/// Weights of the merit `w_obj·T + w_sing·R_sing + w_sm·R_sm` and the
/// barrier cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignWeights {
    pub objective: f64,
    pub singularity: f64,
    pub smoothness: f64,
    pub dhat: f64,
}

impl Default for DesignWeights {
    fn default() -> Self {
        Self { objective: 1.0, singularity: 1.0, smoothness: 0.0, dhat: 0.1 }
    }
}

impl DesignWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("objective", self.objective), ("singularity", self.singularity), ("smoothness", self.smoothness)] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidInput(format!("weight {name} must be finite and non-negative, got {w}")));
            }
        }
        if !(self.dhat > 0.0 && self.dhat.is_finite()) {
            return Err(Error::InvalidInput(format!("dhat must be positive, got {}", self.dhat)));
        }
        Ok(())
    }
}

/// `|x − x̃|²` and its gradient.
pub fn t_match(x: &[Vec3], target: &[Vec3]) -> Result<(f64, Vec<Vec3>)> {
    if x.len() != target.len() {
        return Err(Error::InvalidInput(format!("{} positions against {} targets", x.len(), target.len())));
    }
    let d: Vec<Vec3> = x.iter().zip(target).map(|(a, b)| a - b).collect();
    Ok((d.iter().map(|v| v.norm_squared()).sum(), d.iter().map(|v| v * 2.0).collect()))
}

/// `Σ (k_i − k̂_i)²` and its gradient.
pub fn t_mat(k: &[f64], target: &[f64]) -> Result<(f64, Vec<f64>)> {
    if k.len() != target.len() {
        return Err(Error::InvalidInput(format!("{} stiffness samples against {} targets", k.len(), target.len())));
    }
    let d: Vec<f64> = k.iter().zip(target).map(|(a, b)| a - b).collect();
    Ok((d.iter().map(|v| v * v).sum(), d.iter().map(|v| 2.0 * v).collect()))
}

/// Clamped log barrier `−(d−d̂)² ln(d/d̂)` for `d < d̂`, zero above, and its
/// derivative.
pub fn barrier(d: f64, dhat: f64) -> Result<(f64, f64)> {
    if !(d > 0.0) {
        return Err(Error::InvalidInput(format!("barrier argument must be positive, got {d}")));
    }
    if d >= dhat {
        return Ok((0.0, 0.0));
    }
    let (s, l) = (d - dhat, (d / dhat).ln());
    Ok((-s * s * l, -2.0 * s * l - s * s / d))
}

/// Barrier on the per-vertex phase magnitudes `d_i = scale·|v_i|`; the
/// gradient is with respect to the interleaved `v`.
pub fn r_sing(v: &[f64], scale: f64, dhat: f64) -> Result<(f64, Vec<f64>)> {
    let mut value = 0.0;
    let mut grad = vec![0.0; v.len()];
    for (i, p) in v.chunks_exact(2).enumerate() {
        let m = p[0].hypot(p[1]);
        let (b, db) = barrier(scale * m, dhat).map_err(|_| Error::VanishingPhase(i))?;
        value += b;
        if db != 0.0 {
            grad[2 * i] = db * scale * p[0] / m;
            grad[2 * i + 1] = db * scale * p[1] / m;
        }
    }
    Ok((value, grad))
}

/// Smallest scaled phase magnitude `scale·min |v_i|`.
pub fn min_magnitude(v: &[f64], scale: f64) -> f64 {
    v.chunks_exact(2).map(|p| scale * p[0].hypot(p[1])).fold(f64::INFINITY, f64::min)
}

/// One smoothness term `w (2 − 2 cos(p_i − p_j − δ))` in reduced indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothEdge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
    /// Angle, in the frame of `i`, of `t1` of `j` carried into the tangent
    /// plane of `i`.
    pub transport: f64,
}

/// Rotation by the smallest angle taking unit `from` onto unit `to`.
pub fn minimal_rotation(from: &Vec3, to: &Vec3) -> Mat3 {
    let axis = from.cross(to);
    let (s, c) = (axis.norm(), from.dot(to));
    if s < 1e-14 {
        if c > 0.0 {
            return Mat3::identity();
        }
        // antipodal: half turn about any perpendicular
        let p = if from.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
        let k = (p - from * from.dot(&p)).normalize();
        return k * k.transpose() * 2.0 - Mat3::identity();
    }
    let k = axis / s;
    let kx = k.cross_matrix();
    Mat3::identity() + kx * s + kx * kx * (1.0 - c)
}

/// Cotangent-weighted vector-field smoothness on design angles.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessTerm {
    pub edges: Vec<SmoothEdge>,
}

impl SmoothnessTerm {
    pub fn new(setup: &StripeSetup) -> Self {
        let idx = setup.param_index();
        let edges = setup
            .mesh
            .edges()
            .iter()
            .zip(&setup.weights)
            .map(|(e, &weight)| {
                let [a, b] = e.v;
                let (fa, fb) = (&setup.frames[a], &setup.frames[b]);
                let t = minimal_rotation(&fb.n, &fa.n) * fb.t1;
                SmoothEdge { i: idx[a], j: idx[b], weight, transport: fa.angle_of(&t) }
            })
            .collect();
        Self { edges }
    }

    pub fn value_gradient(&self, p: &[f64]) -> (f64, Vec<f64>) {
        r_smooth(p, &self.edges)
    }
}

pub fn r_smooth(p: &[f64], edges: &[SmoothEdge]) -> (f64, Vec<f64>) {
    let mut value = 0.0;
    let mut grad = vec![0.0; p.len()];
    for e in edges {
        let d = p[e.i] - p[e.j] - e.transport;
        value += e.weight * (2.0 - 2.0 * d.cos());
        let g = 2.0 * e.weight * d.sin();
        grad[e.i] += g;
        grad[e.j] -= g;
    }
    (value, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{grid, tube};
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    #[test]
    fn match_examples() {
        let x = vec![Vec3::new(1.0, 2.0, 3.0); 3];
        let (t, g) = t_match(&x, &x).unwrap();
        assert_eq!(t, 0.0);
        assert!(g.iter().all(|v| *v == Vec3::zeros()));
        let mut y = x.clone();
        y[1].y += 1.0;
        assert_eq!(t_match(&y, &x).unwrap().0, 1.0);
        assert!(t_match(&x[..2], &x).is_err());
    }

    #[test]
    fn match_gradient_fd() {
        let x: Vec<Vec3> = (0..4).map(|i| Vec3::new(i as f64, 0.3, -0.2 * i as f64)).collect();
        let t: Vec<Vec3> = (0..4).map(|i| Vec3::new(0.1, i as f64, 0.5)).collect();
        let (_, g) = t_match(&x, &t).unwrap();
        let h = 1e-6;
        for k in 0..4 {
            for c in 0..3 {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[k][c] += h;
                b[k][c] -= h;
                let fd = (t_match(&a, &t).unwrap().0 - t_match(&b, &t).unwrap().0) / (2.0 * h);
                assert!((fd - g[k][c]).abs() <= 1e-8 * g[k][c].abs().max(1.0));
            }
        }
    }

    #[test]
    fn profile_examples() {
        assert_eq!(t_mat(&[1e5, 2e5], &[1e5, 2e5]).unwrap().0, 0.0);
        let (t, g) = t_mat(&[1e5, 2e5 + 10.0], &[1e5, 2e5]).unwrap();
        assert_eq!(t, 100.0);
        assert_eq!(g, vec![0.0, 20.0]);
    }

    #[test]
    fn barrier_examples() {
        assert_eq!(barrier(0.2, 0.1).unwrap(), (0.0, 0.0));
        let (b, _) = barrier(0.05, 0.1).unwrap();
        assert!((b - 0.05f64.powi(2) * 2f64.ln()).abs() < 1e-15);
        assert!((b - 1.733e-3).abs() < 1e-6);
        let mut prev = 0.0;
        for d in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let (b, _) = barrier(d, 0.1).unwrap();
            assert!(b > prev);
            prev = b;
        }
        assert!(barrier(0.0, 0.1).is_err());
    }

    #[test]
    fn barrier_is_c1_at_cutoff() {
        for d in [0.1 * (1.0 - 1e-8), 0.1, 0.1 * (1.0 + 1e-8)] {
            let (b, db) = barrier(d, 0.1).unwrap();
            assert!(b.abs() <= 1e-10 && db.abs() <= 1e-10);
        }
    }

    #[test]
    fn r_sing_gradient_fd() {
        let v = vec![0.03, 0.01, -0.2, 0.4, 0.002, -0.05];
        let (_, g) = r_sing(&v, 1.3, 0.1).unwrap();
        for k in 0..v.len() {
            let h = 1e-7;
            let (mut a, mut b) = (v.clone(), v.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (r_sing(&a, 1.3, 0.1).unwrap().0 - r_sing(&b, 1.3, 0.1).unwrap().0) / (2.0 * h);
            assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1e-6), "{k}: {fd} vs {}", g[k]);
        }
        assert!(matches!(r_sing(&[0.0, 0.0], 1.0, 0.1), Err(Error::VanishingPhase(0))));
    }

    #[test]
    fn constant_flat_field_is_smooth() {
        let s = StripeSetup::new(grid(4, 4, 1.0, 1.0).unwrap(), None, 1.0).unwrap();
        let t = SmoothnessTerm::new(&s);
        let p = s.params_from_directions(&vec![Vec3::new(0.6, 0.8, 0.0); s.mesh.num_vertices()]);
        let (v, g) = t.value_gradient(&p);
        assert!(v.abs() < 1e-24 && g.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn transported_parallel_field_is_smooth() {
        // the axial direction on a tube is parallel; any transport mismatch shows up here
        let m = tube(1.0, 2.0, 16, 4).unwrap();
        let s = StripeSetup::new(m, None, 1.0).unwrap();
        let axial: Vec<Vec3> = vec![Vec3::y(); s.mesh.num_vertices()];
        let p = s.params_from_directions(&axial);
        let (v, _) = SmoothnessTerm::new(&s).value_gradient(&p);
        assert!(v < 1e-20, "{v}");
    }

    #[test]
    fn minimal_rotation_maps_normals() {
        let a = Vec3::new(0.3, -0.2, 0.9).normalize();
        for b in [Vec3::new(-0.5, 0.1, 0.2).normalize(), a, -a] {
            let r = minimal_rotation(&a, &b);
            assert!((r * a - b).norm() < 1e-12);
            assert!((r.transpose() * r - Mat3::identity()).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn smooth_gradient_and_periodicity(seed in 0u64..50) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let s = StripeSetup::new(tube(1.0, 1.0, 8, 3).unwrap(), None, 1.0).unwrap();
            let t = SmoothnessTerm::new(&s);
            let p: Vec<f64> = (0..s.num_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let (v, g) = t.value_gradient(&p);
            let shifted: Vec<f64> = p.iter().map(|x| x + TAU).collect();
            prop_assert!((t.value_gradient(&shifted).0 - v).abs() <= 1e-12 * v.abs().max(1.0));
            let k = rng.random_range(0..p.len());
            let h = 1e-6;
            let (mut a, mut b) = (p.clone(), p.clone());
            a[k] += h;
            b[k] -= h;
            let fd = (t.value_gradient(&a).0 - t.value_gradient(&b).0) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0));
        }
    }
}
