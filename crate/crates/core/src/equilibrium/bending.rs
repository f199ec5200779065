//! Cylindrical bending of a homogeneous plate through rotation-periodic
//! boundary conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::grid;
use crate::shell::{Material, Materials, Phase, ShellModel, ShellState};
use crate::{Mat3, Vec3};

use super::dofs::{DofMapBuilder, NodeImage};
use super::newton::{static_solve, Equilibrium, NewtonOptions};

/// Thin-plate bending energy `A E h³ / (24 (1−ν²) r²)`.
pub fn kirchhoff_energy(area: f64, young: f64, poisson: f64, thickness: f64, radius: f64) -> f64 {
    area * young * thickness.powi(3) / (24.0 * (1.0 - poisson * poisson) * radius * radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BendingSetup {
    pub radius: f64,
    pub thickness: f64,
    /// Side of the square plate the energy is reported for.
    pub side: f64,
    /// Elements along the bent direction (even).
    pub nx: usize,
    /// Element rows of the translation-periodic strip.
    pub ny: usize,
    pub material: Material,
}

impl BendingSetup {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.thickness > 0.0 && self.side > 0.0) {
            return Err(Error::InvalidInput("bending radius, thickness and side must be positive".into()));
        }
        if self.nx < 2 || self.nx % 2 != 0 || self.ny == 0 {
            return Err(Error::InvalidInput(format!("bending strip needs even nx >= 2 and ny >= 1, got {}x{}", self.nx, self.ny)));
        }
        self.material.validate()
    }

    fn width(&self) -> f64 {
        self.side * self.ny as f64 / self.nx as f64
    }
}

#[derive(Debug, Clone)]
pub struct BendingResult {
    pub nx: usize,
    pub num_free: usize,
    /// Energy of the whole plate (strip energy scaled by area).
    pub energy: f64,
    pub kirchhoff: f64,
    pub equilibrium: Equilibrium,
    pub model: ShellModel,
}

impl BendingResult {
    pub fn relative_error(&self) -> f64 {
        (self.energy - self.kirchhoff) / self.kirchhoff
    }
}

fn rot_y(angle: f64) -> Mat3 {
    let (s, c) = angle.sin_cos();
    Mat3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

/// Bends a strip of length `side` onto radius `r`: the ends are related by
/// a rotation of `side/r` about the cylinder axis, the sides by a
/// translation. Energy is reported for the full `side × side` plate.
pub fn bend_plate(setup: &BendingSetup, opts: &NewtonOptions) -> Result<BendingResult> {
    setup.validate()?;
    let (l, r, w) = (setup.side, setup.radius, setup.width());
    let (nx, ny) = (setup.nx, setup.ny);
    let mesh = grid(nx, ny, l, w)?;
    let normals = vec![Vec3::z(); mesh.num_vertices()];
    let mats = Materials { soft: setup.material, stiff: setup.material };
    let model = ShellModel::extrude(mesh, setup.thickness, normals, mats)?;
    let iface = model.homogeneous(Phase::Soft);
    let nv = model.mesh.num_vertices();

    let centre = Vec3::new(0.5 * l, 0.0, -r);
    let rot = rot_y(l / r);
    let id = |i: usize, j: usize| i + j * (nx + 1);
    let mut b = DofMapBuilder::for_model(&model, &iface);
    for j in 0..=ny {
        for i in 0..=nx {
            let (sx, sy) = (i / nx, j / ny);
            if sx == 0 && sy == 0 {
                continue;
            }
            let rep = id(i % nx, j % ny);
            let rm = if sx == 1 { rot } else { Mat3::identity() };
            let offset = (Mat3::identity() - rm) * centre + Vec3::y() * (sy as f64 * w);
            for layer in [0, nv] {
                b.image(layer + id(i, j), NodeImage { rep: layer + rep, rot: rm, offset, macro_dir: Vec3::zeros() });
            }
        }
    }
    let guess = ShellState {
        x: model
            .rest
            .iter()
            .map(|p| {
                let a = (p.x - 0.5 * l) / r;
                centre + Vec3::new(a.sin(), 0.0, a.cos()) * (r + p.z) + Vec3::y() * p.y
            })
            .collect(),
        xhat: vec![Vec3::zeros(); model.num_nodes()],
    };
    let pin = id(nx / 2, 0);
    b.pin(pin, 0, guess.x[pin].x).pin(pin, 1, guess.x[pin].y);
    let dofs = b.build()?;
    let free = dofs.restrict(&guess, 0.0);
    let equilibrium = static_solve(&model, &iface, &dofs, &free, opts)?;
    let area = l * l;
    let energy = equilibrium.energy * area / (l * w);
    let m = &setup.material;
    Ok(BendingResult {
        nx,
        num_free: dofs.num_free(),
        energy,
        kirchhoff: kirchhoff_energy(area, m.young(), m.poisson(), setup.thickness, r),
        equilibrium,
        model,
    })
}
