use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::eigen::Eigenplane;

/// Smallest admissible phase magnitude of the pin vertex in the basis.
pub const PIN_TOL: f64 = 1e-10;

/// Eigenplane with its θ-origin fixed by `b_k = 0`, `a_k > 0`.
#[derive(Debug, Clone)]
pub struct PinnedEigen {
    pub plane: Eigenplane,
    /// Pinned vertex (index into the reduced phase vector).
    pub k: usize,
    pub theta_ref: f64,
    pub v_ref: Vec<f64>,
    /// In-plane B-orthonormal complement of `v_ref`.
    pub v_ref_perp: Vec<f64>,
}

/// Vertex with the largest phase magnitude in `v1`.
pub fn default_pin(plane: &Eigenplane) -> usize {
    let mag = |i: usize| plane.v1[2 * i].hypot(plane.v1[2 * i + 1]);
    (0..plane.v1.len() / 2)
        .max_by(|&i, &j| mag(i).total_cmp(&mag(j)).then(j.cmp(&i)))
        .unwrap_or(0)
}

/// Rotates the eigenplane basis so that the reference vector has `b_k = 0`
/// and `a_k > 0`.
pub fn pin_reference(plane: Eigenplane, k: usize) -> Result<PinnedEigen> {
    if 2 * k + 1 >= plane.v1.len() {
        return Err(Error::InvalidInput(format!("pin vertex {k} out of range")));
    }
    let (a1, b1) = (plane.v1[2 * k], plane.v1[2 * k + 1]);
    let (a2, b2) = (plane.v2[2 * k], plane.v2[2 * k + 1]);
    if a1.hypot(b1) < PIN_TOL && a2.hypot(b2) < PIN_TOL {
        return Err(Error::VanishingPin(k));
    }
    let mut theta = (-b1).atan2(b2);
    if a1 * theta.cos() + a2 * theta.sin() <= 0.0 {
        theta += PI;
    }
    let theta_ref = wrap(theta);
    let v_ref = rotate(&plane, theta_ref);
    let v_ref_perp = rotate_derivative(&plane, theta_ref);
    Ok(PinnedEigen { plane, k, theta_ref, v_ref, v_ref_perp })
}

fn wrap(t: f64) -> f64 {
    let w = t.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

fn rotate(p: &Eigenplane, t: f64) -> Vec<f64> {
    let (s, c) = t.sin_cos();
    p.v1.iter().zip(&p.v2).map(|(x, y)| c * x + s * y).collect()
}

fn rotate_derivative(p: &Eigenplane, t: f64) -> Vec<f64> {
    let (s, c) = t.sin_cos();
    p.v1.iter().zip(&p.v2).map(|(x, y)| -s * x + c * y).collect()
}

impl PinnedEigen {
    /// `v(θ) = v_ref cos θ + v_ref⊥ sin θ`.
    pub fn eigenvector_at(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        self.v_ref.iter().zip(&self.v_ref_perp).map(|(x, y)| c * x + s * y).collect()
    }

    /// `dv/dθ`.
    pub fn eigenvector_derivative(&self, theta: f64) -> Vec<f64> {
        let (s, c) = theta.sin_cos();
        self.v_ref.iter().zip(&self.v_ref_perp).map(|(x, y)| -s * x + c * y).collect()
    }

    pub fn lambda(&self) -> f64 {
        self.plane.lambda
    }

    /// Phase magnitude of the pinned vertex in the reference vector.
    pub fn pin_magnitude(&self) -> f64 {
        self.v_ref[2 * self.k]
    }
}
