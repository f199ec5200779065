use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::Merit;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckEntry {
    pub coordinate: usize,
    pub adjoint: f64,
    pub fd: f64,
    pub rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub entries: Vec<GradCheckEntry>,
    pub max_rel_err: f64,
    pub tol: f64,
    pub step: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

fn central<M: Merit>(merit: &M, x: &[f64], k: usize, h: f64) -> Result<f64> {
    let (mut a, mut b) = (x.to_vec(), x.to_vec());
    a[k] += h;
    b[k] -= h;
    Ok((merit.evaluate(&a, None)?.0 - merit.evaluate(&b, None)?.0) / (2.0 * h))
}

/// `|fd − g| / max(|g|, |fd|, floor)`; the floor keeps near-zero entries
/// from dominating.
fn relative(fd: f64, g: f64, floor: f64) -> f64 {
    (fd - g).abs() / g.abs().max(fd.abs()).max(floor).max(f64::MIN_POSITIVE)
}

/// Compares the analytic gradient with central differences on `n_probes`
/// seeded random coordinates.
pub fn gradient_check<M: Merit>(merit: &M, x: &[f64], n_probes: usize, tol: f64, step: f64, seed: u64) -> Result<GradCheckReport> {
    if !(step > 0.0) {
        return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {step}")));
    }
    let (_, state) = merit.evaluate(x, None)?;
    let g = merit.gradient(x, &state)?;
    let floor = 1e-6 * g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coords = sample(&mut rng, x.len(), n_probes.min(x.len())).into_vec();
    coords.sort_unstable();
    let mut entries = Vec::with_capacity(coords.len());
    for k in coords {
        let fd = central(merit, x, k, step)?;
        let rel_err = relative(fd, g[k], floor);
        entries.push(GradCheckEntry { coordinate: k, adjoint: g[k], fd, rel_err, pass: rel_err <= tol });
    }
    let max_rel_err = entries.iter().map(|e| e.rel_err).fold(0.0, f64::max);
    Ok(GradCheckReport { entries, max_rel_err, tol, step })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub step: f64,
    pub fd: f64,
    pub rel_err: f64,
}

/// Central differences of one coordinate over a range of steps.
pub fn fd_sweep<M: Merit>(merit: &M, x: &[f64], coordinate: usize, steps: &[f64]) -> Result<Vec<SweepPoint>> {
    let (_, state) = merit.evaluate(x, None)?;
    let g = merit.gradient(x, &state)?[coordinate];
    steps
        .iter()
        .map(|&h| {
            let fd = central(merit, x, coordinate, h)?;
            Ok(SweepPoint { step: h, fd, rel_err: relative(fd, g, 0.0) })
        })
        .collect()
}
