//! Forward evaluation of a design and its total gradient.

use serde::{Deserialize, Serialize};

use crate::equilibrium::{
    assemble, static_solve_loaded, young_modulus, DofMap, DofMapBuilder, Equilibrium, HomogenizationOptions, Homogenized,
    NewtonOptions, PeriodicCell,
};
use crate::error::{Error, Result};
use crate::shell::{Interface, ShellModel, ShellState};
use crate::stripes::{
    default_pin, level_set_transfer, phases, pin_reference, LevelSet, PinnedEigen, StripeMatrices, StripeSetup,
    TransferParams,
};
use crate::Vec3;

use super::adjoint::{equilibrium_adjoint, explicit_phi_gradient};
use super::objectives::{min_magnitude, r_sing, t_mat, t_match, DesignWeights, SmoothnessTerm};
use super::sensitivity::SensitivitySystem;

/// Boundary conditions of a static load case on mesh vertices; every
/// condition acts on both shell layers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadCase {
    /// Held at the rest position.
    pub clamped: Vec<usize>,
    /// Moved by a prescribed displacement.
    pub displacements: Vec<(usize, [f64; 3])>,
    /// Dead force per vertex, split evenly over the two layers.
    pub forces: Vec<(usize, [f64; 3])>,
}

impl LoadCase {
    fn check(&self, nv: usize) -> Result<()> {
        let ids = self.clamped.iter().chain(self.displacements.iter().map(|d| &d.0)).chain(self.forces.iter().map(|f| &f.0));
        if let Some(v) = ids.into_iter().find(|&&v| v >= nv) {
            return Err(Error::InvalidInput(format!("load case vertex {v} out of range ({nv} vertices)")));
        }
        Ok(())
    }

    pub fn dofs(&self, model: &ShellModel, iface: &Interface) -> Result<DofMap> {
        let nv = model.mesh.num_vertices();
        self.check(nv)?;
        let mut b = DofMapBuilder::for_model(model, iface);
        for &v in &self.clamped {
            b.fix_node(v, model.rest[v]).fix_node(nv + v, model.rest[nv + v]);
        }
        for &(v, d) in &self.displacements {
            let d = Vec3::from(d);
            b.fix_node(v, model.rest[v] + d).fix_node(nv + v, model.rest[nv + v] + d);
        }
        b.build()
    }

    /// Nodal forces, or `None` without loads.
    pub fn nodal_forces(&self, model: &ShellModel) -> Option<Vec<Vec3>> {
        if self.forces.is_empty() {
            return None;
        }
        let nv = model.mesh.num_vertices();
        let mut f = vec![Vec3::zeros(); 2 * nv];
        for &(v, force) in &self.forces {
            let half = Vec3::from(force) * 0.5;
            f[v] += half;
            f[nv + v] += half;
        }
        Some(f)
    }

    pub fn force_norm2(&self) -> f64 {
        self.forces.iter().map(|(_, f)| Vec3::from(*f).norm_squared()).sum()
    }
}

/// What the design is scored against.
#[derive(Debug, Clone)]
pub enum Objective {
    /// Directional stiffness `k(θ_i)` of a periodic cell against targets.
    Profile { cell: PeriodicCell, thetas: Vec<f64>, targets: Vec<f64>, strain: f64, options: HomogenizationOptions },
    /// Mid-surface of the loaded shell against a target shape.
    Match { model: ShellModel, case: LoadCase, target: Vec<Vec3> },
    /// Squared mid-surface displacement per squared load.
    Stiffness { model: ShellModel, case: LoadCase },
}

impl Objective {
    pub fn model(&self) -> &ShellModel {
        match self {
            Objective::Profile { cell, .. } => &cell.model,
            Objective::Match { model, .. } | Objective::Stiffness { model, .. } => model,
        }
    }

    pub fn num_load_cases(&self) -> usize {
        match self {
            Objective::Profile { thetas, .. } => thetas.len(),
            _ => 1,
        }
    }
}

/// Mechanical state of one evaluation.
#[derive(Debug, Clone)]
pub enum Mechanics {
    Profile(Vec<Homogenized>),
    Static { dofs: DofMap, equilibrium: Equilibrium },
}

/// Everything computed at one `(p, θ)`.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub p: Vec<f64>,
    pub theta: f64,
    pub matrices: StripeMatrices,
    pub pinned: PinnedEigen,
    /// Working eigenvector `v(θ)` over reduced vertices.
    pub v: Vec<f64>,
    pub alpha: Vec<f64>,
    pub level_set: LevelSet,
    /// Level set per mesh vertex.
    pub phi: Vec<f64>,
    pub iface: Interface,
    pub mechanics: Mechanics,
    /// Stiffness samples of a profile objective.
    pub stiffness: Vec<f64>,
    pub objective: f64,
    pub r_sing: f64,
    pub r_smooth: f64,
    pub merit: f64,
    /// Smallest scaled phase magnitude.
    pub min_magnitude: f64,
}

impl Evaluation {
    pub fn lambda(&self) -> f64 {
        self.pinned.lambda()
    }
}

/// Linear solves spent on one gradient.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveCounts {
    pub eigen_adjoint: usize,
    pub equilibrium_adjoint: usize,
    pub load_cases: usize,
}

impl SolveCounts {
    pub fn total(&self) -> usize {
        self.eigen_adjoint + self.equilibrium_adjoint
    }
}

#[derive(Debug, Clone)]
pub struct DesignGradient {
    /// `d merit / dp`.
    pub dp: Vec<f64>,
    /// `d merit / dθ`.
    pub dtheta: f64,
    /// Pin multiplier at the reference eigenvector.
    pub mu: f64,
    pub residuals: [f64; 3],
    pub solves: SolveCounts,
    /// Largest Hessian shift used by an equilibrium adjoint.
    pub hessian_shift: f64,
}

impl DesignGradient {
    pub fn norm(&self) -> f64 {
        (self.dp.iter().map(|x| x * x).sum::<f64>() + self.dtheta * self.dtheta).sqrt()
    }
}

/// Stripe design problem: design angles `p` plus eigenplane angle `θ`.
#[derive(Debug, Clone)]
pub struct DesignProblem {
    pub stripes: StripeSetup,
    pub transfer: TransferParams,
    pub objective: Objective,
    pub weights: DesignWeights,
    /// Options of static solves (profile solves use their own).
    pub newton: NewtonOptions,
    /// Reduced pin vertex; chosen at each solve when unset.
    pub pin: Option<usize>,
    smoothness: SmoothnessTerm,
    scale: f64,
}

fn mid_surface(model: &ShellModel, x: &[Vec3]) -> Vec<Vec3> {
    let nv = model.mesh.num_vertices();
    (0..nv).map(|v| (x[v] + x[nv + v]) * 0.5).collect()
}

impl DesignProblem {
    pub fn new(stripes: StripeSetup, transfer: TransferParams, objective: Objective, weights: DesignWeights) -> Result<Self> {
        transfer.validate()?;
        weights.validate()?;
        let model = objective.model();
        if model.mesh.num_vertices() != stripes.mesh.num_vertices() || model.mesh.triangles() != stripes.mesh.triangles() {
            return Err(Error::InvalidInput("shell and stripe meshes differ".into()));
        }
        match &objective {
            Objective::Profile { thetas, targets, strain, .. } => {
                if thetas.len() != targets.len() || thetas.is_empty() {
                    return Err(Error::InvalidInput(format!("{} angles against {} targets", thetas.len(), targets.len())));
                }
                if !(strain.abs() > 1e-12 && strain.is_finite()) {
                    return Err(Error::InvalidInput("profile strain must be non-zero".into()));
                }
            }
            Objective::Match { case, target, model } => {
                if target.len() != model.mesh.num_vertices() {
                    return Err(Error::InvalidInput(format!("{} targets for {} vertices", target.len(), model.mesh.num_vertices())));
                }
                case.check(model.mesh.num_vertices())?;
            }
            Objective::Stiffness { case, model } => {
                if !(case.force_norm2() > 0.0) {
                    return Err(Error::InvalidInput("stiffness objective needs a non-zero load".into()));
                }
                case.check(model.mesh.num_vertices())?;
            }
        }
        let smoothness = SmoothnessTerm::new(&stripes);
        let scale = stripes.mesh.total_area().sqrt();
        Ok(Self { stripes, transfer, objective, weights, newton: NewtonOptions::default(), pin: None, smoothness, scale })
    }

    pub fn num_params(&self) -> usize {
        self.stripes.num_params()
    }

    /// Factor turning `|v_i|` into the barrier argument.
    pub fn magnitude_scale(&self) -> f64 {
        self.scale
    }

    pub fn smoothness(&self) -> &SmoothnessTerm {
        &self.smoothness
    }

    /// Forward pipeline at `(p, θ)`; `warm` seeds the mechanical solves.
    pub fn evaluate(&self, p: &[f64], theta: f64, warm: Option<&Evaluation>) -> Result<Evaluation> {
        if p.len() != self.num_params() {
            return Err(Error::InvalidInput(format!("{} design angles for {} parameters", p.len(), self.num_params())));
        }
        if !theta.is_finite() || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite design".into()));
        }
        let sol = self.stripes.solve(p)?;
        let k = self.pin.unwrap_or_else(|| default_pin(&sol.plane));
        let pinned = pin_reference(sol.plane, k)?;
        let v = pinned.eigenvector_at(theta);
        let alpha = phases(&v)?;
        let level_set = level_set_transfer(&alpha, self.transfer)?;
        let phi: Vec<f64> = self.stripes.param_index().iter().map(|&r| level_set.phi[r]).collect();
        let model = self.objective.model();
        let iface = model.interface(&phi, None)?;

        let (mechanics, stiffness, objective) = match &self.objective {
            Objective::Profile { cell, thetas, targets, strain, options } => {
                let w = warm.and_then(|w| match &w.mechanics {
                    Mechanics::Profile(h) if h.len() == thetas.len() => Some(h.as_slice()),
                    _ => None,
                });
                let h = cell.stiffness_profile(&iface, thetas, *strain, options, w)?;
                let k: Vec<f64> = h.iter().map(|r| r.young).collect();
                let t = t_mat(&k, targets)?.0;
                (Mechanics::Profile(h), k, t)
            }
            Objective::Match { model, case, .. } | Objective::Stiffness { model, case } => {
                let dofs = case.dofs(model, &iface)?;
                let start = warm
                    .and_then(|w| match &w.mechanics {
                        Mechanics::Static { equilibrium, .. } => Some(&equilibrium.state),
                        _ => None,
                    })
                    .cloned()
                    .unwrap_or_else(|| model.rest_state());
                let free = dofs.restrict(&start, 0.0);
                let loads = case.nodal_forces(model);
                let equilibrium = static_solve_loaded(model, &iface, &dofs, loads.as_deref(), &free, &self.newton)?;
                let t = self.static_objective(&equilibrium.state)?.0;
                (Mechanics::Static { dofs, equilibrium }, Vec::new(), t)
            }
        };
        let r_sing = r_sing(&v, self.scale, self.weights.dhat)?.0;
        let r_smooth = self.smoothness.value_gradient(p).0;
        let w = &self.weights;
        let merit = w.objective * objective + w.singularity * r_sing + w.smoothness * r_smooth;
        let min_magnitude = min_magnitude(&v, self.scale);
        Ok(Evaluation {
            p: p.to_vec(),
            theta,
            matrices: sol.matrices,
            pinned,
            v,
            alpha,
            level_set,
            phi,
            iface,
            mechanics,
            stiffness,
            objective,
            r_sing,
            r_smooth,
            merit,
            min_magnitude,
        })
    }

    /// Objective of a static case and its gradient on all node positions.
    fn static_objective(&self, state: &ShellState) -> Result<(f64, Vec<Vec3>)> {
        let model = self.objective.model();
        let nv = model.mesh.num_vertices();
        let mid = mid_surface(model, &state.x);
        let (t, dm) = match &self.objective {
            Objective::Match { target, .. } => t_match(&mid, target)?,
            Objective::Stiffness { case, .. } => {
                let rest = mid_surface(model, &model.rest);
                let (t, g) = t_match(&mid, &rest)?;
                let s = 1.0 / case.force_norm2();
                (t * s, g.into_iter().map(|x| x * s).collect())
            }
            Objective::Profile { .. } => return Err(Error::InvalidInput("profile objective has no static state".into())),
        };
        let mut dx = vec![Vec3::zeros(); 2 * nv];
        for (v, d) in dm.iter().enumerate() {
            dx[v] = d * 0.5;
            dx[nv + v] = d * 0.5;
        }
        Ok((t, dx))
    }

    /// `dT/dφ` per mesh vertex through the equilibrium adjoints.
    fn phi_gradient(&self, ev: &Evaluation, counts: &mut SolveCounts, shift: &mut f64) -> Result<Vec<f64>> {
        let model = self.objective.model();
        match (&self.objective, &ev.mechanics) {
            (Objective::Profile { targets, .. }, Mechanics::Profile(cases)) => {
                let (_, dk) = t_mat(&ev.stiffness, targets)?;
                let mut out = vec![0.0; model.mesh.num_vertices()];
                for (h, dk) in cases.iter().zip(dk) {
                    let c = young_modulus(1.0, &h.state)?;
                    let state = &h.equilibrium.state;
                    let g = assemble(model, &ev.iface, &h.dofs, state, false)?.gradient;
                    let adj = equilibrium_adjoint(model, &ev.iface, &h.dofs, state, &g)?;
                    let explicit = explicit_phi_gradient(model, &ev.iface, state)?;
                    counts.equilibrium_adjoint += 1;
                    *shift = shift.max(adj.shift);
                    for ((o, e), a) in out.iter_mut().zip(explicit).zip(adj.dphi) {
                        *o += dk * c * (e + a);
                    }
                }
                Ok(out)
            }
            (_, Mechanics::Static { dofs, equilibrium }) => {
                let (_, dx) = self.static_objective(&equilibrium.state)?;
                let mut full = vec![0.0; dofs.num_full()];
                for (n, d) in dx.iter().enumerate() {
                    for c in 0..3 {
                        full[DofMap::x_index(n, c)] = d[c];
                    }
                }
                let adj = equilibrium_adjoint(model, &ev.iface, dofs, &equilibrium.state, &dofs.reduce(&full))?;
                counts.equilibrium_adjoint += 1;
                *shift = shift.max(adj.shift);
                Ok(adj.dphi)
            }
            _ => Err(Error::InvalidInput("evaluation does not belong to this objective".into())),
        }
    }

    /// Total merit gradient with respect to `p` and `θ`.
    pub fn gradient(&self, ev: &Evaluation) -> Result<DesignGradient> {
        let w = &self.weights;
        let mut solves = SolveCounts { load_cases: self.objective.num_load_cases(), ..Default::default() };
        let mut hessian_shift = 0.0;
        let dphi = self.phi_gradient(ev, &mut solves, &mut hessian_shift)?;

        // level set → phase → working eigenvector
        let mut dalpha = vec![0.0; ev.alpha.len()];
        for (&r, d) in self.stripes.param_index().iter().zip(&dphi) {
            dalpha[r] += d;
        }
        let mut g = vec![0.0; ev.v.len()];
        for (r, da) in dalpha.iter().enumerate() {
            let (a, b) = (ev.v[2 * r], ev.v[2 * r + 1]);
            let s = w.objective * da * ev.level_set.jac[r] / (a * a + b * b);
            g[2 * r] = -b * s;
            g[2 * r + 1] = a * s;
        }
        let (_, gs) = r_sing(&ev.v, self.scale, w.dhat)?;
        g.iter_mut().zip(gs).for_each(|(x, y)| *x += w.singularity * y);

        let dv = ev.pinned.eigenvector_derivative(ev.theta);
        let dtheta: f64 = g.iter().zip(&dv).map(|(a, b)| a * b).sum();

        // v = cos θ v_ref + sin θ J v_ref
        let (s, c) = ev.theta.sin_cos();
        let g_ref: Vec<f64> = g
            .chunks_exact(2)
            .flat_map(|q| [c * q[0] + s * q[1], -s * q[0] + c * q[1]])
            .collect();
        let sys = SensitivitySystem::new(&ev.matrices, &ev.pinned)?;
        let mut dp = sys.adjoint_gradient(&self.stripes, &ev.matrices, &ev.pinned, &ev.p, &g_ref)?;
        solves.eigen_adjoint += 1;
        let (_, gsm) = self.smoothness.value_gradient(&ev.p);
        dp.iter_mut().zip(gsm).for_each(|(x, y)| *x += w.smoothness * y);
        Ok(DesignGradient { dp, dtheta, mu: sys.mu, residuals: sys.residuals, solves, hessian_shift })
    }
}
