//! Stripe synthesis: design angles → field → edge angles → (A, B) →
//! eigenplane → pinned eigenvector → phases → level set.

mod eigen;
mod frames;
mod level_set;
mod matrices;
mod pin;

pub use eigen::{
    quarter_rotation, residual_norm, solve_eigenplane, solve_eigenplane_with, EigenOptions, Eigenplane,
    DEGENERATE_GAP,
};
pub use frames::{tangent_frames, Frame};
pub use level_set::{level_set_transfer, max_slope, phases, transfer, LevelSet, TransferParams, PHASE_TOL};
pub use matrices::{
    assemble_stripe_matrices, edge_entries, edge_omega, field_derivative, field_from_params, mismatch_energy,
    params_from_directions, rotation, StripeMatrices, VectorFieldParams,
};
pub use pin::{default_pin, pin_reference, PinnedEigen, PIN_TOL};

use crate::error::{Error, Result};
use crate::mesh::{PeriodicMap, TriMesh};
use crate::Vec3;

/// Mesh-dependent data shared by every stripe solve on one surface.
///
/// Design angles live on the reduced vertices: one per vertex, or one per
/// periodic representative.
#[derive(Debug, Clone)]
pub struct StripeSetup {
    pub mesh: TriMesh,
    pub normals: Vec<Vec3>,
    pub frames: Vec<Frame>,
    pub weights: Vec<f64>,
    pub periodic: Option<PeriodicMap>,
    pub frequency: f64,
    pub eigen: EigenOptions,
    index: Vec<usize>,
    num_params: usize,
}

/// Outcome of the forward stripe solve at one design.
#[derive(Debug, Clone)]
pub struct StripeSolution {
    pub z: Vec<Vec3>,
    pub matrices: StripeMatrices,
    pub plane: Eigenplane,
}

impl StripeSetup {
    pub fn new(mesh: TriMesh, periodic: Option<PeriodicMap>, frequency: f64) -> Result<Self> {
        if !(frequency > 0.0 && frequency.is_finite()) {
            return Err(Error::InvalidInput(format!("frequency must be positive, got {frequency}")));
        }
        let normals = mesh.vertex_normals()?;
        let frames = tangent_frames(&mesh, &normals, periodic.as_ref())?;
        let weights = mesh.cotan_edge_weights();
        let (index, num_params) = match &periodic {
            Some(map) => ((0..mesh.num_vertices()).map(|v| map.reduced_index(v)).collect(), map.num_reduced()),
            None => ((0..mesh.num_vertices()).collect(), mesh.num_vertices()),
        };
        Ok(Self { mesh, normals, frames, weights, periodic, frequency, eigen: EigenOptions::default(), index, num_params })
    }

    /// Number of design angles.
    pub fn num_params(&self) -> usize {
        self.num_params
    }

    /// Design-angle index of each mesh vertex.
    pub fn param_index(&self) -> &[usize] {
        &self.index
    }

    /// Reduced index of a mesh vertex, or an error if it is not a periodic
    /// representative.
    pub fn reduced_vertex(&self, v: usize) -> Result<usize> {
        if v >= self.mesh.num_vertices() {
            return Err(Error::InvalidInput(format!("vertex {v} out of range")));
        }
        if let Some(map) = &self.periodic {
            if !map.is_representative(v) {
                return Err(Error::InvalidInput(format!(
                    "pin vertex {v} is a periodic image; use its representative {}",
                    map.rep(v)
                )));
            }
        }
        Ok(self.index[v])
    }

    /// Mesh vertex holding reduced index `r`.
    pub fn mesh_vertex(&self, r: usize) -> usize {
        match &self.periodic {
            Some(map) => map.representatives()[r],
            None => r,
        }
    }

    /// Per-vertex angles on every mesh vertex.
    pub fn full_params(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.num_params, "design vector length");
        self.index.iter().map(|&r| p[r]).collect()
    }

    /// Design angles of a field given by mesh-vertex tangent directions.
    pub fn params_from_directions(&self, dirs: &[Vec3]) -> Vec<f64> {
        let full = params_from_directions(&self.frames, dirs);
        (0..self.num_params).map(|r| full[self.mesh_vertex(r)]).collect()
    }

    pub fn field(&self, p: &[f64]) -> Vec<Vec3> {
        field_from_params(&self.frames, &VectorFieldParams { p: self.full_params(p), frequency: self.frequency })
    }

    pub fn matrices(&self, p: &[f64]) -> Result<(Vec<Vec3>, StripeMatrices)> {
        let z = self.field(p);
        let omega = edge_omega(&self.mesh, &z);
        let m = assemble_stripe_matrices(&self.mesh, &omega, &self.weights, self.periodic.as_ref())?;
        Ok((z, m))
    }

    pub fn solve(&self, p: &[f64]) -> Result<StripeSolution> {
        let (z, matrices) = self.matrices(p)?;
        let plane = solve_eigenplane_with(&matrices, &self.eigen)?;
        Ok(StripeSolution { z, matrices, plane })
    }
}
