//! Differentiable stripe patterns on triangle meshes, solid-shell XFEM
//! simulation of the resulting bi-material shells, periodic homogenization
//! and gradient-based inverse design of the driving vector field.
//!
//! The pipeline, from design angles to objective:
//!
//! ```text
//! p ─► z ─► ω ─► (A, B) ─► eigenplane ─► pin/θ ─► v ─► α ─► φ ─► shell ─► equilibrium ─► T
//! ```
//!
//! Every stage is differentiable; [`inverse`] assembles `dT/dp` and `dT/dθ`
//! with one eigen-adjoint and one equilibrium-adjoint solve per load case.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod equilibrium;
pub mod error;
pub mod inverse;
pub mod linalg;
pub mod mesh;
pub mod optimizer;
pub mod par;
pub mod shell;
pub mod stripes;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 3-vector of `f64` used for positions, normals and fields.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 matrix of `f64`.
pub type Mat3 = nalgebra::Matrix3<f64>;
