use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sparse_from_triplets, spmv, SparseMat, SpdSolver};
use crate::shell::{Interface, ShellModel, ShellState};
use crate::Vec3;

use super::assemble::{assemble_loaded, Assembled};
use super::dofs::DofMap;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonOptions {
    pub max_iterations: usize,
    /// Gradient tolerance relative to [`force_scale`].
    pub tolerance: f64,
    pub max_halvings: usize,
    pub max_shift_tries: usize,
    pub armijo: f64,
    /// How many times a converged saddle point may be left along a
    /// direction of negative curvature.
    pub max_escapes: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { max_iterations: 100, tolerance: 1e-8, max_halvings: 40, max_shift_tries: 20, armijo: 1e-4, max_escapes: 5 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct NewtonReport {
    pub iterations: usize,
    /// Reduced gradient norm before each step and at the end.
    pub residuals: Vec<f64>,
    pub energies: Vec<f64>,
    pub shifts: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub escapes: usize,
    pub tolerance: f64,
}

/// Converged static state.
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub free: Vec<f64>,
    pub state: ShellState,
    pub energy: f64,
    pub gradient_norm: f64,
    pub report: NewtonReport,
}

/// Characteristic nodal force `max(μ, λ)·h·ℓ̄` used to scale tolerances.
pub fn force_scale(model: &ShellModel) -> f64 {
    let m = &model.materials;
    let modulus = [m.soft.mu, m.soft.lambda, m.stiff.mu, m.stiff.lambda].into_iter().fold(0.0, f64::max);
    modulus * model.thickness * model.mesh.mean_edge_length()
}

/// Adds a seeded random normal offset of size `amplitude` to the free
/// position unknowns so that flat configurations can leave an unstable
/// branch.
pub fn buckling_seed(model: &ShellModel, dofs: &DofMap, free: &mut [f64], amplitude: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nv = model.mesh.num_vertices();
    let mut state = dofs.expand(free);
    for v in 0..nv {
        let d = model.normals[v] * (amplitude * rng.random_range(-1.0..1.0));
        state.x[v] += d;
        state.x[nv + v] += d;
    }
    let macro_value = dofs.macro_col().map_or(0.0, |c| free[c]);
    let seeded = dofs.restrict(&state, macro_value);
    free.copy_from_slice(&seeded);
}

/// Everything a solve evaluates against.
struct Ctx<'a> {
    model: &'a ShellModel,
    iface: &'a Interface,
    dofs: &'a DofMap,
    loads: Option<&'a [Vec3]>,
    opts: &'a NewtonOptions,
}

impl Ctx<'_> {
    fn evaluate(&self, free: &[f64], hess: bool) -> Result<Assembled> {
        assemble_loaded(self.model, self.iface, self.dofs, &self.dofs.expand(free), self.loads, hess)
    }

    /// Backtracks along `dir` until the energy drops below the quadratic
    /// model `U + c·(t·slope + ½t²·curv)`.
    fn backtrack(&self, free: &[f64], sys: &Assembled, dir: &[f64], slope: f64, curv: f64) -> Option<Step> {
        let gnorm = norm(&sys.gradient);
        let noise = 1e-12 * sys.energy.abs();
        let mut t = 1.0;
        for _ in 0..=self.opts.max_halvings {
            let trial: Vec<f64> = free.iter().zip(dir).map(|(x, d)| x + t * d).collect();
            if let Ok(next) = self.evaluate(&trial, false) {
                let model_decrease = t * slope + 0.5 * t * t * curv.min(0.0);
                let sufficient = next.energy <= sys.energy + self.opts.armijo * model_decrease;
                // below round-off of the energy sum, decrease of the residual decides
                let roundoff = model_decrease.abs() <= noise && next.energy <= sys.energy + noise && norm(&next.gradient) < gnorm;
                if sufficient || roundoff {
                    return Some(Step { t, free: trial, sys: next });
                }
            }
            t *= 0.5;
        }
        None
    }

    /// Step of length `h` (largest component) along negative curvature,
    /// signed downhill.
    fn curvature_step(&self, free: &[f64], sys: &Assembled, solver: &SpdSolver) -> Result<Option<Step>> {
        let n = self.dofs.num_free();
        let h = sparse_from_triplets(n, n, &sys.hessian)?;
        let Some((mut d, curv)) = negative_curvature(solver, &h) else { return Ok(None) };
        let scale = self.model.thickness / d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sign = if dot(&d, &sys.gradient) > 0.0 { -scale } else { scale };
        d.iter_mut().for_each(|v| *v *= sign);
        let slope = dot(&d, &sys.gradient);
        Ok(self.backtrack(free, sys, &d, slope, curv * scale * scale))
    }
}

/// Unit vector of negative curvature by inverse iteration on the shifted
/// factorization, with its Rayleigh quotient.
fn negative_curvature(solver: &SpdSolver, h: &SparseMat) -> Option<(Vec<f64>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut d: Vec<f64> = (0..solver.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    for it in 1..=200 {
        d = solver.solve(&d);
        let s = norm(&d);
        if !(s > 0.0 && s.is_finite()) {
            return None;
        }
        d.iter_mut().for_each(|v| *v /= s);
        if it % 5 == 0 {
            let curv = dot(&d, &spmv(h, &d));
            if curv < 0.0 {
                return Some((d, curv));
            }
        }
    }
    None
}

struct Step {
    t: f64,
    free: Vec<f64>,
    sys: Assembled,
}

/// Projected Newton with adaptive diagonal shift and backtracking Armijo
/// line search. Where the Hessian is indefinite a step along negative
/// curvature competes with the shifted Newton step; a converged point with
/// indefinite Hessian is left that way up to `max_escapes` times.
pub fn static_solve(
    model: &ShellModel,
    iface: &Interface,
    dofs: &DofMap,
    free0: &[f64],
    opts: &NewtonOptions,
) -> Result<Equilibrium> {
    static_solve_loaded(model, iface, dofs, None, free0, opts)
}

/// [`static_solve`] with dead nodal forces on the position unknowns; the
/// reported energy is the total potential `U − f·x`.
pub fn static_solve_loaded(
    model: &ShellModel,
    iface: &Interface,
    dofs: &DofMap,
    loads: Option<&[Vec3]>,
    free0: &[f64],
    opts: &NewtonOptions,
) -> Result<Equilibrium> {
    if free0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite initial guess".into()));
    }
    if loads.is_some_and(|f| f.len() != model.num_nodes()) {
        return Err(Error::InvalidInput("one load vector per shell node expected".into()));
    }
    let ctx = Ctx { model, iface, dofs, loads, opts };
    let n = dofs.num_free();
    let tol = opts.tolerance * force_scale(model);
    let mut report = NewtonReport { tolerance: tol, ..Default::default() };
    let mut free = free0.to_vec();
    let mut sys = ctx.evaluate(&free, false)?;
    loop {
        let gnorm = norm(&sys.gradient);
        report.residuals.push(gnorm);
        report.energies.push(sys.energy);
        if gnorm <= tol {
            if report.escapes < opts.max_escapes {
                if sys.hessian.is_empty() {
                    sys = ctx.evaluate(&free, true)?;
                }
                if SpdSolver::new(n, &sys.hessian).is_err() {
                    let solver = SpdSolver::regularized(n, &sys.hessian, opts.max_shift_tries)?;
                    if let Some(step) = ctx.curvature_step(&free, &sys, &solver)? {
                        report.escapes += 1;
                        free = step.free;
                        sys = step.sys;
                        continue;
                    }
                }
            }
            let state = dofs.expand(&free);
            return Ok(Equilibrium { free, state, energy: sys.energy, gradient_norm: gnorm, report });
        }
        if report.iterations >= opts.max_iterations {
            return Err(Error::MaxIterations { iterations: report.iterations, grad_norm: gnorm });
        }
        if sys.hessian.is_empty() {
            sys = ctx.evaluate(&free, true)?;
        }
        let solver = SpdSolver::regularized(n, &sys.hessian, opts.max_shift_tries)?;
        report.shifts.push(solver.shift);
        let mut dir = solver.solve(&sys.gradient);
        if solver.shift == 0.0 {
            // thin shells are badly conditioned; one refinement step recovers the lost digits
            let h = sparse_from_triplets(n, n, &sys.hessian)?;
            let r: Vec<f64> = sys.gradient.iter().zip(spmv(&h, &dir)).map(|(g, hd)| g - hd).collect();
            dir.iter_mut().zip(solver.solve(&r)).for_each(|(d, c)| *d += c);
        }
        dir.iter_mut().for_each(|d| *d = -*d);
        let mut slope = dot(&dir, &sys.gradient);
        if !(slope < 0.0) || dir.iter().any(|v| !v.is_finite()) {
            dir = sys.gradient.iter().map(|g| -g).collect();
            slope = -gnorm * gnorm;
        }
        let mut step = ctx.backtrack(&free, &sys, &dir, slope, 0.0);
        if solver.shift > 0.0 {
            if let Some(alt) = ctx.curvature_step(&free, &sys, &solver)? {
                if step.as_ref().is_none_or(|s| alt.sys.energy < s.sys.energy) {
                    step = Some(alt);
                }
            }
        }
        let Some(step) = step else {
            return Err(Error::LineSearch { halvings: opts.max_halvings });
        };
        report.step_sizes.push(step.t);
        report.iterations += 1;
        free = step.free;
        sys = step.sys;
    }
}
