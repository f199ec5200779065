//! Objectives, regularizers and adjoint sensitivities of the design angles.

mod adjoint;
mod objectives;
mod problem;
mod sensitivity;

pub use adjoint::{equilibrium_adjoint, explicit_phi_gradient, EquilibriumAdjoint};
pub use objectives::{
    barrier, min_magnitude, minimal_rotation, r_sing, r_smooth, t_mat, t_match, DesignWeights, SmoothEdge, SmoothnessTerm,
};
pub use problem::{
    DesignGradient, DesignProblem, Evaluation, LoadCase, Mechanics, Objective, SolveCounts,
};
pub use sensitivity::{a_action, a_contract, chain_to_params, omega_jacobian, unpinned_defect, SensitivitySystem};
