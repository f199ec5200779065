//! Static equilibrium: affine DOF reduction, projected Newton, periodic
//! homogenization and the cylindrical bending benchmark.

mod assemble;
mod bending;
mod dofs;
mod homogenize;
mod newton;

pub use assemble::{assemble, assemble_loaded, energy, local_dofs, Assembled};
pub use bending::{bend_plate, kirchhoff_energy, BendingResult, BendingSetup};
pub use dofs::{DofMap, DofMapBuilder, NodeImage};
pub use homogenize::{reuss_voigt, young_modulus, HomogenizationOptions, Homogenized, MacroState, PeriodicCell};
pub use newton::{buckling_seed, force_scale, static_solve, static_solve_loaded, Equilibrium, NewtonOptions, NewtonReport};
