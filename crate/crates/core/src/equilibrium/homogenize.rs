//! Periodic unit cells under prescribed uniaxial macro stretch.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{build_periodic_map, PeriodicMap, TriMesh};
use crate::par::*;
use crate::shell::{Interface, Materials, ShellModel, ShellState};
use crate::{Mat3, Vec3};

use super::dofs::{DofMap, DofMapBuilder, NodeImage};
use super::newton::{buckling_seed, static_solve, Equilibrium, NewtonOptions};

/// Uniaxial macro load: stretch `1 + strain` along `(cos θ, sin θ)`, free
/// transverse contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroState {
    pub theta: f64,
    pub strain: f64,
    pub area: f64,
    pub thickness: f64,
}

impl MacroState {
    pub fn stretch(&self) -> f64 {
        1.0 + self.strain
    }

    pub fn direction(&self) -> Vec3 {
        Vec3::new(self.theta.cos(), self.theta.sin(), 0.0)
    }

    pub fn transverse(&self) -> Vec3 {
        Vec3::new(-self.theta.sin(), self.theta.cos(), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.stretch() > 0.0 && self.area > 0.0 && self.thickness > 0.0) {
            return Err(Error::InvalidInput(format!("invalid macro state {self:?}")));
        }
        Ok(())
    }
}

/// `E_macro = 2U/(A h ε²)`: the energy density of uniaxial stress is `½Eε²`.
pub fn young_modulus(energy: f64, state: &MacroState) -> Result<f64> {
    state.validate()?;
    if state.strain.abs() < 1e-12 {
        return Err(Error::InvalidInput("macro strain is zero; Young's modulus undefined".into()));
    }
    Ok(2.0 * energy / (state.area * state.thickness * state.strain * state.strain))
}

/// Reuss (series) and Voigt (parallel) mixture bounds.
pub fn reuss_voigt(e_soft: f64, e_stiff: f64, stiff_fraction: f64) -> (f64, f64) {
    let f = stiff_fraction;
    (1.0 / (f / e_stiff + (1.0 - f) / e_soft), f * e_stiff + (1.0 - f) * e_soft)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomogenizationOptions {
    pub newton: NewtonOptions,
    /// Seed of a `1e-6·h` random normal perturbation of the initial guess.
    pub buckling_seed: Option<u64>,
}

impl Default for HomogenizationOptions {
    fn default() -> Self {
        Self { newton: NewtonOptions::default(), buckling_seed: None }
    }
}

/// One homogenization solve.
#[derive(Debug, Clone)]
pub struct Homogenized {
    pub state: MacroState,
    pub young: f64,
    /// Free transverse boundary translation `τ` (m).
    pub transverse: f64,
    pub equilibrium: Equilibrium,
    pub dofs: DofMap,
}

/// Flat periodic cell: shell model, vertex pairing and lattice vectors.
#[derive(Debug, Clone)]
pub struct PeriodicCell {
    pub model: ShellModel,
    pub map: PeriodicMap,
    pub lattice: [Vec3; 2],
    /// Mesh vertex whose bottom node is pinned against rigid translation.
    pub pin: usize,
}

impl PeriodicCell {
    pub fn new(model: ShellModel, map: PeriodicMap) -> Result<Self> {
        if map.axes.len() != 2 || map.num_full() != model.mesh.num_vertices() {
            return Err(Error::InvalidInput("cell needs a two-axis periodic map over the mesh".into()));
        }
        let lattice = [0, 1].map(|k| Vec3::from(map.axes[k]));
        let (lo, hi) = model.mesh.bounding_box();
        let centre = (lo + hi) * 0.5;
        let pin = map
            .representatives()
            .iter()
            .copied()
            .min_by(|&a, &b| {
                let (da, db) = ((model.mesh.vertex(a) - centre).norm(), (model.mesh.vertex(b) - centre).norm());
                da.total_cmp(&db).then(a.cmp(&b))
            })
            .ok_or_else(|| Error::InvalidInput("empty cell".into()))?;
        Ok(Self { model, map, lattice, pin })
    }

    /// Flat cell in the xy-plane with normals along +z.
    pub fn flat(mesh: TriMesh, lattice: [Vec3; 2], thickness: f64, materials: Materials) -> Result<Self> {
        let map = build_periodic_map(&mesh, &lattice, 1e-6 * mesh.mean_edge_length())?;
        let normals = vec![Vec3::z(); mesh.num_vertices()];
        Self::new(ShellModel::extrude(mesh, thickness, normals, materials)?, map)
    }

    pub fn area(&self) -> f64 {
        self.lattice[0].cross(&self.lattice[1]).norm()
    }

    pub fn macro_state(&self, theta: f64, strain: f64) -> MacroState {
        MacroState { theta, strain, area: self.area(), thickness: self.model.thickness }
    }

    fn reference_length(&self) -> f64 {
        self.area().sqrt()
    }

    /// Affine part `F = I + ε a aᵀ` of the macro deformation.
    pub fn macro_gradient(&self, state: &MacroState) -> Mat3 {
        let a = state.direction();
        Mat3::identity() + a * a.transpose() * state.strain
    }

    pub fn dofs(&self, iface: &Interface, state: &MacroState) -> Result<DofMap> {
        state.validate()?;
        let f = self.macro_gradient(state);
        let b = state.transverse();
        let base = self.lattice.map(|l| f * l);
        let dir = self.lattice.map(|l| b * (b.dot(&l) / self.reference_length()));
        let nv = self.model.mesh.num_vertices();
        let mut builder = DofMapBuilder::for_model(&self.model, iface);
        for v in 0..nv {
            let rep = self.map.rep(v);
            if rep == v {
                continue;
            }
            let s = self.map.shift(v);
            let (sx, sy) = (f64::from(s[0]), f64::from(s[1]));
            let image = NodeImage {
                rep,
                rot: Mat3::identity(),
                offset: base[0] * sx + base[1] * sy,
                macro_dir: dir[0] * sx + dir[1] * sy,
            };
            builder.image(v, image);
            builder.image(nv + v, NodeImage { rep: nv + rep, ..image });
        }
        builder.pin_node(self.pin, f * self.model.rest[self.pin]);
        builder.with_macro();
        builder.build()
    }

    /// Affine deformation of the rest state with zero transverse contraction.
    pub fn affine_state(&self, state: &MacroState) -> ShellState {
        let f = self.macro_gradient(state);
        let mut s = self.model.rest_state();
        s.x.iter_mut().for_each(|x| *x = f * *x);
        s
    }

    /// Solves one load case; `warm` is a previous state and transverse
    /// translation at the same angle.
    pub fn homogenize(
        &self,
        iface: &Interface,
        state: &MacroState,
        opts: &HomogenizationOptions,
        warm: Option<(&ShellState, f64)>,
    ) -> Result<Homogenized> {
        let dofs = self.dofs(iface, state)?;
        let mut free = match warm {
            Some((s, tau)) => dofs.restrict(s, tau),
            None => dofs.restrict(&self.affine_state(state), 0.0),
        };
        if let Some(seed) = opts.buckling_seed {
            buckling_seed(&self.model, &dofs, &mut free, 1e-6 * self.model.thickness, seed);
        }
        let equilibrium = static_solve(&self.model, iface, &dofs, &free, &opts.newton)?;
        let transverse = dofs.macro_col().map_or(0.0, |c| equilibrium.free[c]);
        let young = young_modulus(equilibrium.energy, state)?;
        Ok(Homogenized { state: *state, young, transverse, equilibrium, dofs })
    }

    /// `k(θ_i)` at each angle; load cases run in parallel.
    pub fn stiffness_profile(
        &self,
        iface: &Interface,
        thetas: &[f64],
        strain: f64,
        opts: &HomogenizationOptions,
        warm: Option<&[Homogenized]>,
    ) -> Result<Vec<Homogenized>> {
        if let Some(t) = thetas.iter().find(|t| !(0.0..std::f64::consts::PI).contains(*t)) {
            return Err(Error::InvalidInput(format!("sample angle {t} outside [0, π)")));
        }
        let results: Vec<Result<Homogenized>> = thetas
            .par_iter()
            .enumerate()
            .map(|(i, &theta)| {
                let state = self.macro_state(theta, strain);
                let w = warm.and_then(|w| w.get(i)).map(|h| (&h.equilibrium.state, h.transverse));
                self.homogenize(iface, &state, opts, w).map_err(|e| Error::AtAngle { theta, source: Box::new(e) })
            })
            .collect();
        results.into_iter().collect()
    }
}
