//! Gradient-based minimization of the design merit over `(p, θ)`.

mod check;
mod design;
mod lbfgs;

pub use check::{fd_sweep, gradient_check, GradCheckEntry, GradCheckReport, SweepPoint};
pub use design::{DesignMerit, DesignState, QuadraticSurrogate};
pub use lbfgs::{minimize, Algorithm, IterRecord, OptOptions, OptRun, Status};

use crate::error::Result;

/// Breakdown of a merit value for logging.
#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Terms {
    pub objective: f64,
    pub r_sing: f64,
    pub r_smooth: f64,
    pub lambda: f64,
}

/// A differentiable merit over a flat variable vector.
pub trait Merit {
    /// Whatever an evaluation leaves behind for gradients and warm starts.
    type State: Clone;

    fn num_vars(&self) -> usize;

    /// Merit at `x`, optionally warm-started from a previous state.
    fn evaluate(&self, x: &[f64], warm: Option<&Self::State>) -> Result<(f64, Self::State)>;

    fn gradient(&self, x: &[f64], state: &Self::State) -> Result<Vec<f64>>;

    fn terms(&self, _state: &Self::State) -> Terms {
        Terms::default()
    }

    /// Errors that must stop a run instead of rejecting a trial step.
    fn is_fatal(&self, _err: &crate::Error) -> bool {
        false
    }
}
