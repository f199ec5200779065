use crate::error::{Error, Result};
use crate::inverse::{DesignProblem, Evaluation};

use super::{Merit, Terms};

/// Smallest scaled pin magnitude tolerated during a run.
pub const PIN_ABORT: f64 = 1e-6;

/// The stripe design problem over `x = [p; θ]` with the pin vertex fixed.
#[derive(Debug, Clone)]
pub struct DesignMerit {
    pub problem: DesignProblem,
    /// Keeps `θ` at its start value (its gradient is reported as zero).
    pub freeze_theta: bool,
}

pub type DesignState = Box<Evaluation>;

impl DesignMerit {
    /// Fixes the pin from the problem, or from the start design when unset.
    pub fn new(mut problem: DesignProblem, p0: &[f64], theta0: f64) -> Result<Self> {
        if problem.pin.is_none() {
            let ev = problem.evaluate(p0, theta0, None)?;
            problem.pin = Some(ev.pinned.k);
        }
        Ok(Self { problem, freeze_theta: false })
    }

    pub fn pack(p: &[f64], theta: f64) -> Vec<f64> {
        let mut x = p.to_vec();
        x.push(theta);
        x
    }

    pub fn split(x: &[f64]) -> (&[f64], f64) {
        (&x[..x.len() - 1], x[x.len() - 1])
    }
}

impl Merit for DesignMerit {
    type State = DesignState;

    fn num_vars(&self) -> usize {
        self.problem.num_params() + 1
    }

    fn evaluate(&self, x: &[f64], warm: Option<&DesignState>) -> Result<(f64, DesignState)> {
        let (p, theta) = Self::split(x);
        let ev = self.problem.evaluate(p, theta, warm.map(|w| w.as_ref()))?;
        let pin = ev.pinned.pin_magnitude() * self.problem.magnitude_scale();
        if pin < PIN_ABORT {
            return Err(Error::VanishingPin(ev.pinned.k));
        }
        Ok((ev.merit, Box::new(ev)))
    }

    fn gradient(&self, _x: &[f64], state: &DesignState) -> Result<Vec<f64>> {
        let g = self.problem.gradient(state)?;
        Ok(Self::pack(&g.dp, if self.freeze_theta { 0.0 } else { g.dtheta }))
    }

    fn terms(&self, s: &DesignState) -> Terms {
        Terms { objective: s.objective, r_sing: s.r_sing, r_smooth: s.r_smooth, lambda: s.lambda() }
    }

    fn is_fatal(&self, err: &Error) -> bool {
        matches!(err, Error::VanishingPin(_))
    }
}

/// `½ Σ d_i (x_i − c_i)²`, a stand-in merit without any simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSurrogate {
    pub diag: Vec<f64>,
    pub centre: Vec<f64>,
}

impl Merit for QuadraticSurrogate {
    type State = ();

    fn num_vars(&self) -> usize {
        self.diag.len()
    }

    fn evaluate(&self, x: &[f64], _warm: Option<&()>) -> Result<(f64, ())> {
        let f = x.iter().zip(&self.centre).zip(&self.diag).map(|((x, c), d)| 0.5 * d * (x - c) * (x - c)).sum();
        Ok((f, ()))
    }

    fn gradient(&self, x: &[f64], _state: &()) -> Result<Vec<f64>> {
        Ok(x.iter().zip(&self.centre).zip(&self.diag).map(|((x, c), d)| d * (x - c)).collect())
    }
}
