use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm};

use super::{Merit, Terms};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Lbfgs,
    SteepestDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptOptions {
    pub algorithm: Algorithm,
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop when the gradient norm drops below this.
    pub grad_tol: f64,
    /// Relative merit decrease over `stagnation_window` iterations below
    /// which the run stops.
    pub stagnation_tol: f64,
    pub stagnation_window: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Largest change of any variable in one step (radians).
    pub max_step: f64,
}

impl Default for OptOptions {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Lbfgs,
            memory: 10,
            max_iterations: 100,
            grad_tol: 1e-8,
            stagnation_tol: 1e-10,
            stagnation_window: 5,
            armijo: 1e-4,
            max_backtracks: 30,
            max_step: 0.2,
        }
    }
}

impl OptOptions {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 && self.algorithm == Algorithm::Lbfgs {
            return Err(Error::InvalidInput("L-BFGS memory must be at least 1".into()));
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return Err(Error::InvalidInput(format!("armijo constant must lie in (0, 1), got {}", self.armijo)));
        }
        if !(self.max_step > 0.0) || !(self.grad_tol >= 0.0) || !(self.stagnation_tol >= 0.0) {
            return Err(Error::InvalidInput("step and tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Converged,
    Stagnated,
    MaxIterations,
    LineSearchFailed,
    /// A fatal candidate error (e.g. the pin vertex lost its phase).
    Aborted,
}

/// One accepted iterate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    pub merit: f64,
    #[serde(rename = "T")]
    pub objective: f64,
    #[serde(rename = "R_sing")]
    pub r_sing: f64,
    #[serde(rename = "R_sm")]
    pub r_smooth: f64,
    pub grad_norm: f64,
    pub step: f64,
    pub lambda: f64,
    pub evaluations: usize,
}

impl IterRecord {
    fn new(iter: usize, merit: f64, t: Terms, grad_norm: f64, step: f64, evaluations: usize) -> Self {
        Self {
            iter,
            merit,
            objective: t.objective,
            r_sing: t.r_sing,
            r_smooth: t.r_smooth,
            grad_norm,
            step,
            lambda: t.lambda,
            evaluations,
        }
    }
}

/// Log of a run; `history` holds accepted iterates only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptRun {
    pub options: OptOptions,
    pub seed: u64,
    pub status: Status,
    pub message: Option<String>,
    pub start: IterRecord,
    pub history: Vec<IterRecord>,
    pub x: Vec<f64>,
}

impl OptRun {
    pub fn final_record(&self) -> &IterRecord {
        self.history.last().unwrap_or(&self.start)
    }
}

fn two_loop(g: &[f64], mem: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(q, y)| *q -= a * y);
        alphas.push(a);
    }
    if let Some((s, y, _)) = mem.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|q| *q *= gamma);
    }
    for ((s, y, rho), a) in mem.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(q, s)| *q += (a - b) * s);
    }
    q.iter_mut().for_each(|q| *q = -*q);
    q
}

fn cap(d: &mut [f64], max_step: f64) {
    let m = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if m > max_step {
        d.iter_mut().for_each(|x| *x *= max_step / m);
    }
}

/// Minimizes `merit` from `x0` with Armijo backtracking (halving).
pub fn minimize<M: Merit>(merit: &M, x0: &[f64], opts: &OptOptions, seed: u64) -> Result<OptRun> {
    opts.validate()?;
    if x0.len() != merit.num_vars() {
        return Err(Error::InvalidInput(format!("{} start values for {} variables", x0.len(), merit.num_vars())));
    }
    let mut x = x0.to_vec();
    let (mut f, mut state) = merit.evaluate(&x, None)?;
    let mut g = merit.gradient(&x, &state)?;
    let start = IterRecord::new(0, f, merit.terms(&state), norm(&g), 0.0, 1);
    let mut run = OptRun { options: *opts, seed, status: Status::MaxIterations, message: None, start, history: Vec::new(), x: x.clone() };
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut merits = vec![f];

    for iter in 1..=opts.max_iterations {
        if norm(&g) <= opts.grad_tol {
            run.status = Status::Converged;
            break;
        }
        let mut d = match opts.algorithm {
            Algorithm::Lbfgs => two_loop(&g, &mem),
            Algorithm::SteepestDescent => g.iter().map(|v| -v).collect(),
        };
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            mem.clear();
            d = g.iter().map(|v| -v).collect();
        }
        if mem.is_empty() || opts.algorithm == Algorithm::SteepestDescent {
            // no curvature information: the first step moves by max_step
            let m = d.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            d.iter_mut().for_each(|x| *x *= opts.max_step / m);
        } else {
            cap(&mut d, opts.max_step);
        }
        slope = dot(&d, &g);

        let mut t = 1.0;
        let mut evaluations = 0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + t * d).collect();
            evaluations += 1;
            match merit.evaluate(&trial, Some(&state)) {
                Ok((ft, st)) if ft <= f + opts.armijo * t * slope && ft < f => {
                    accepted = Some((trial, ft, st));
                    break;
                }
                Ok(_) => {}
                Err(e) if merit.is_fatal(&e) => {
                    run.status = Status::Aborted;
                    run.message = Some(e.to_string());
                    run.x = x;
                    return Ok(run);
                }
                Err(e) => log::debug!("trial step {t:e} rejected: {e}"),
            }
            t *= 0.5;
        }
        let Some((xn, fn_, sn)) = accepted else {
            run.status = Status::LineSearchFailed;
            run.message = Some(format!("no decrease after {} halvings", opts.max_backtracks));
            break;
        };
        let gn = merit.gradient(&xn, &sn)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            mem.push_back((s.clone(), y, 1.0 / sy));
            if mem.len() > opts.memory {
                mem.pop_front();
            }
        }
        x = xn;
        f = fn_;
        state = sn;
        g = gn;
        run.history.push(IterRecord::new(iter, f, merit.terms(&state), norm(&g), norm(&s), evaluations));
        merits.push(f);
        let w = opts.stagnation_window;
        if merits.len() > w {
            let old = merits[merits.len() - 1 - w];
            if (old - f) <= opts.stagnation_tol * old.abs().max(f64::MIN_POSITIVE) {
                run.status = Status::Stagnated;
                break;
            }
        }
    }
    if run.status == Status::MaxIterations && norm(&g) <= opts.grad_tol {
        run.status = Status::Converged;
    }
    run.x = x;
    Ok(run)
}
