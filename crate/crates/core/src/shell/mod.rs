//! Six-node solid-shell prisms with ridge-enriched bi-material elements.

mod kernel;
mod material;
mod model;
mod shape;
mod xfem;

pub use kernel::{det3, energy, energy_gradient, hessian, inv3, rest_gradients, Materials, QuadPoint, Real, M3};
pub use material::{Fiber, Material, Phase};
pub use model::{extrude_shell, ElementEval, Interface, PhiSensitivity, ShellModel, ShellState};
pub use shape::{barycentric, node_coords, prism_shape, LineRule, PrismShape, QuadraturePlan, TriangleRule, BARY_GRAD};
pub use xfem::{
    check_resolution, classify, crossings_on_interval, cut_quadrature, cut_subdivide, perturb_zero, ridge,
    ridge_coefficients, uncut_quadrature, wrapped_difference, zero_crossing_phase, ElementKind, ResolutionReport,
    SubTriangle, ZERO_PERTURBATION,
};
