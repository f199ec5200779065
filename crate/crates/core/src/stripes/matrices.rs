use crate::error::{Error, Result};
use crate::linalg::{sparse_from_triplets, SparseMat};
use crate::mesh::{PeriodicMap, TriMesh};
use crate::par::*;
use crate::Vec3;

use super::frames::Frame;

/// Design parameters: one tangent angle per vertex and a global frequency
/// (radians per meter).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldParams {
    pub p: Vec<f64>,
    pub frequency: f64,
}

/// `z_i = f·(cos p_i t1_i + sin p_i t2_i)`.
pub fn field_from_params(frames: &[Frame], params: &VectorFieldParams) -> Vec<Vec3> {
    assert_eq!(frames.len(), params.p.len());
    frames
        .iter()
        .zip(&params.p)
        .map(|(f, &p)| f.direction(p) * params.frequency)
        .collect()
}

/// `∂z_i/∂p_i`.
pub fn field_derivative(frame: &Frame, p: f64, frequency: f64) -> Vec3 {
    (frame.t2 * p.cos() - frame.t1 * p.sin()) * frequency
}

/// Design angles reproducing the tangential directions of `dirs`.
pub fn params_from_directions(frames: &[Frame], dirs: &[Vec3]) -> Vec<f64> {
    frames.iter().zip(dirs).map(|(f, d)| f.angle_of(d)).collect()
}

/// Integrated angle change `ω = ½ eᵀ(z_i + z_j)` per edge, oriented from
/// `edge.v[0]` to `edge.v[1]`.
pub fn edge_omega(mesh: &TriMesh, z: &[Vec3]) -> Vec<f64> {
    mesh.edges()
        .iter()
        .map(|e| {
            let [i, j] = e.v;
            0.5 * (mesh.vertex(j) - mesh.vertex(i)).dot(&(z[i] + z[j]))
        })
        .collect()
}

/// Quadratic form of the phase mismatch energy and the lumped mass, both over
/// interleaved `(a, b)` pairs of the reduced vertices.
#[derive(Debug, Clone)]
pub struct StripeMatrices {
    /// Hessian of the mismatch energy: `E = ½ vᵀAv`.
    pub a: SparseMat,
    pub a_entries: Vec<(usize, usize, f64)>,
    /// Diagonal of B.
    pub b: Vec<f64>,
    pub omega: Vec<f64>,
    pub weights: Vec<f64>,
    /// Full vertex → reduced vertex.
    pub vertex_index: Vec<usize>,
    pub num_reduced: usize,
}

impl StripeMatrices {
    pub fn dim(&self) -> usize {
        2 * self.num_reduced
    }

    /// Expands a reduced phase vector to all vertices.
    pub fn expand(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; 2 * self.vertex_index.len()];
        for (i, &r) in self.vertex_index.iter().enumerate() {
            out[2 * i] = v[2 * r];
            out[2 * i + 1] = v[2 * r + 1];
        }
        out
    }

    /// `vᵀBv`.
    pub fn b_norm2(&self, v: &[f64]) -> f64 {
        v.iter().zip(&self.b).map(|(x, m)| m * x * x).sum()
    }

    pub fn b_dot(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).zip(&self.b).map(|((x, y), m)| m * x * y).sum()
    }
}

/// 2×2 rotation `R(ω)` acting on `(a, b)`.
pub fn rotation(omega: f64) -> [[f64; 2]; 2] {
    let (s, c) = omega.sin_cos();
    [[c, -s], [s, c]]
}

/// Entries contributed by one edge `(i, j)` with weight `w` and angle `ω`,
/// in reduced vertex indices `ri`, `rj`.
pub fn edge_entries(ri: usize, rj: usize, w: f64, omega: f64) -> [(usize, usize, f64); 16] {
    let r = rotation(omega);
    let mut out = [(0, 0, 0.0); 16];
    let mut k = 0;
    for p in 0..2 {
        for q in 0..2 {
            let id = if p == q { 2.0 * w } else { 0.0 };
            out[k] = (2 * ri + p, 2 * ri + q, id);
            out[k + 1] = (2 * rj + p, 2 * rj + q, id);
            // A_ji = −2w R, A_ij = −2w Rᵀ
            out[k + 2] = (2 * rj + p, 2 * ri + q, -2.0 * w * r[p][q]);
            out[k + 3] = (2 * ri + q, 2 * rj + p, -2.0 * w * r[p][q]);
            k += 4;
        }
    }
    out
}

/// Assembles A and the lumped mass B, congruence-projected onto the
/// periodic representatives when a map is given.
pub fn assemble_stripe_matrices(
    mesh: &TriMesh,
    omega: &[f64],
    weights: &[f64],
    periodic: Option<&PeriodicMap>,
) -> Result<StripeMatrices> {
    if mesh.num_edges() == 0 {
        return Err(Error::InvalidInput("mesh has no edges".into()));
    }
    if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidInput("edge weights must be finite and non-negative".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidInput("all edge weights are zero".into()));
    }
    let (vertex_index, num_reduced) = match periodic {
        Some(map) => ((0..mesh.num_vertices()).map(|v| map.reduced_index(v)).collect(), map.num_reduced()),
        None => ((0..mesh.num_vertices()).collect::<Vec<_>>(), mesh.num_vertices()),
    };
    let edges = mesh.edges();
    let blocks: Vec<[(usize, usize, f64); 16]> = (0..edges.len())
        .into_par_iter()
        .map(|e| {
            let [i, j] = edges[e].v;
            edge_entries(vertex_index[i], vertex_index[j], weights[e], omega[e])
        })
        .collect();
    let a_entries: Vec<(usize, usize, f64)> = blocks.into_iter().flatten().collect();
    let a = sparse_from_triplets(2 * num_reduced, 2 * num_reduced, &a_entries)?;

    let mut b = vec![0.0; 2 * num_reduced];
    for (v, m) in mesh.lumped_vertex_areas().into_iter().enumerate() {
        let r = vertex_index[v];
        b[2 * r] += m;
        b[2 * r + 1] += m;
    }
    Ok(StripeMatrices {
        a,
        a_entries,
        b,
        omega: omega.to_vec(),
        weights: weights.to_vec(),
        vertex_index,
        num_reduced,
    })
}

/// `Σ w |Ψ_j − e^{iω}Ψ_i|²` evaluated directly on full per-vertex phases.
pub fn mismatch_energy(mesh: &TriMesh, omega: &[f64], weights: &[f64], v_full: &[f64]) -> f64 {
    mesh.edges()
        .iter()
        .zip(omega.iter().zip(weights))
        .map(|(e, (&om, &w))| {
            let [i, j] = e.v;
            let (s, c) = om.sin_cos();
            let (ai, bi) = (v_full[2 * i], v_full[2 * i + 1]);
            let re = v_full[2 * j] - (c * ai - s * bi);
            let im = v_full[2 * j + 1] - (s * ai + c * bi);
            w * (re * re + im * im)
        })
        .sum()
}
