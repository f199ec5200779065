use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible per-vertex phase magnitude.
pub const PHASE_TOL: f64 = 1e-14;

/// Transfer parameters: `a1` smooths the triangle wave, `a2` shifts the
/// stiff/soft ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferParams {
    pub a1: f64,
    pub a2: f64,
}

impl Default for TransferParams {
    fn default() -> Self {
        Self { a1: 0.05, a2: 0.0 }
    }
}

impl TransferParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a1 > 0.0 && self.a1 <= 1.0) {
            return Err(Error::InvalidInput(format!("a1 must lie in (0, 1], got {}", self.a1)));
        }
        if !(-1.0..=1.0).contains(&self.a2) {
            return Err(Error::InvalidInput(format!("a2 must lie in [-1, 1], got {}", self.a2)));
        }
        Ok(())
    }
}

/// Per-vertex level set and its derivative with respect to the phase angle.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub phi: Vec<f64>,
    /// `dφ/dα`.
    pub jac: Vec<f64>,
    pub params: TransferParams,
}

/// `α_i = atan2(b_i, a_i)` over interleaved pairs.
pub fn phases(v: &[f64]) -> Result<Vec<f64>> {
    v.chunks_exact(2)
        .enumerate()
        .map(|(i, p)| {
            if p[0].hypot(p[1]) < PHASE_TOL {
                Err(Error::VanishingPhase(i))
            } else {
                Ok(p[1].atan2(p[0]))
            }
        })
        .collect()
}

/// Smoothed triangle wave `φ(α)` and `dφ/dα`.
pub fn transfer(alpha: f64, params: TransferParams) -> (f64, f64) {
    let c = 1.0 - params.a1;
    let s = c * (alpha - 0.5 * PI).sin();
    let phi = 1.0 - FRAC_2_PI * s.acos() - params.a2;
    let ds = c * alpha.sin();
    let dphi = FRAC_2_PI * ds / (1.0 - s * s).sqrt();
    (phi, dphi)
}

/// Upper bound of `|dφ/dα|`.
pub fn max_slope(a1: f64) -> f64 {
    let c = 1.0 - a1;
    FRAC_2_PI * c / (1.0 - c * c).sqrt()
}

pub fn level_set_transfer(alpha: &[f64], params: TransferParams) -> Result<LevelSet> {
    params.validate()?;
    let (phi, jac) = alpha.iter().map(|&a| transfer(a, params)).unzip();
    Ok(LevelSet { phi, jac, params })
}
