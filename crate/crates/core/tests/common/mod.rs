#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stripeforge_core::equilibrium::{HomogenizationOptions, NewtonOptions, PeriodicCell};
use stripeforge_core::inverse::{DesignProblem, DesignWeights, Objective};
use stripeforge_core::mesh::{build_periodic_map, grid};
use stripeforge_core::shell::{Material, Materials};
use stripeforge_core::stripes::{StripeSetup, TransferParams};
use stripeforge_core::Vec3;

pub const L: f64 = 0.01;

pub fn materials() -> Materials {
    Materials { soft: Material::from_young_poisson(1e6, 0.3), stiff: Material::from_young_poisson(1e7, 0.3) }
}

/// Flat periodic `n×n` cell of side `L` with 1.5 stripes per cell.
pub fn profile_problem(n: usize, thetas: Vec<f64>, targets: Vec<f64>, weights: DesignWeights, tol: f64) -> DesignProblem {
    let mesh = grid(n, n, L, L).unwrap();
    let lattice = [Vec3::x() * L, Vec3::y() * L];
    let map = build_periodic_map(&mesh, &lattice, 1e-9).unwrap();
    let stripes = StripeSetup::new(mesh.clone(), Some(map), 2.0 * PI * 1.5 / L).unwrap();
    let cell = PeriodicCell::flat(mesh, lattice, 5e-4, materials()).unwrap();
    let options = HomogenizationOptions { newton: NewtonOptions { tolerance: tol, ..Default::default() }, ..Default::default() };
    let objective = Objective::Profile { cell, thetas, targets, strain: 0.01, options };
    DesignProblem::new(stripes, TransferParams::default(), objective, weights).unwrap()
}

/// Uniform direction plus seeded noise.
pub fn noisy_design(s: &StripeSetup, seed: u64, spread: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = s.params_from_directions(&vec![Vec3::new(1.0, 0.3, 0.0); s.mesh.num_vertices()]);
    base.iter().map(|b| b + rng.random_range(-spread..spread)).collect()
}

/// Radial wave vectors about a point slightly off the cell centre:
/// concentric stripes.
pub fn concentric_design(s: &StripeSetup) -> Vec<f64> {
    let c = Vec3::new(0.5 * L + 1e-4, 0.5 * L + 1.3e-4, 0.0);
    let dirs: Vec<Vec3> = s.mesh.vertices().iter().map(|v| (v - c).normalize()).collect();
    s.params_from_directions(&dirs)
}

pub fn three_angles() -> Vec<f64> {
    vec![0.0, PI / 3.0, 2.0 * PI / 3.0]
}
