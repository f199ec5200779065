//! Level-set sensitivities of a converged equilibrium.

use crate::equilibrium::{assemble, local_dofs, DofMap};
use crate::error::Result;
use crate::linalg::SpdSolver;
use crate::par::*;
use crate::shell::{Interface, PhiSensitivity, ShellModel, ShellState};

#[derive(Debug, Clone)]
pub struct EquilibriumAdjoint {
    /// Solution of `H y = rhs` over the free unknowns.
    pub y: Vec<f64>,
    /// `−yᵀ ∂g/∂φ` per mesh vertex.
    pub dphi: Vec<f64>,
    /// Diagonal shift needed to factor `H` (0 at a stable equilibrium).
    pub shift: f64,
}

fn sensitivities(model: &ShellModel, iface: &Interface, state: &ShellState) -> Result<Vec<(usize, PhiSensitivity)>> {
    let cut: Vec<usize> = (0..model.num_elements()).filter(|&e| iface.kinds[e].is_cut()).collect();
    let out: Vec<Result<Option<(usize, PhiSensitivity)>>> = cut
        .into_par_iter()
        .map(|e| Ok(model.element_phi_sensitivity(e, iface, state)?.map(|s| (e, s))))
        .collect();
    Ok(out.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().collect())
}

/// `∂U/∂φ` at fixed unknowns, per mesh vertex.
pub fn explicit_phi_gradient(model: &ShellModel, iface: &Interface, state: &ShellState) -> Result<Vec<f64>> {
    let mut out = vec![0.0; model.mesh.num_vertices()];
    for (e, s) in sensitivities(model, iface, state)? {
        for (v, d) in model.mesh.triangles()[e].iter().zip(s.energy) {
            out[*v] += d;
        }
    }
    Ok(out)
}

/// Solves `H y = rhs` at the equilibrium and contracts `y` with the mixed
/// derivative of the reduced gradient.
pub fn equilibrium_adjoint(
    model: &ShellModel,
    iface: &Interface,
    dofs: &DofMap,
    state: &ShellState,
    rhs: &[f64],
) -> Result<EquilibriumAdjoint> {
    let n = dofs.num_free();
    let h = assemble(model, iface, dofs, state, true)?.hessian;
    let solver = match SpdSolver::new(n, &h) {
        Ok(s) => s,
        Err(_) => {
            let s = SpdSolver::regularized(n, &h, 20)?;
            log::warn!("equilibrium Hessian not positive definite; adjoint uses shift {:e}", s.shift);
            s
        }
    };
    let y = solver.solve(rhs);
    let mut y_full = vec![0.0; dofs.num_full()];
    for (r, yf) in y_full.iter_mut().enumerate() {
        let (c, v) = dofs.row(r);
        *yf = c.iter().zip(v).map(|(&c, &v)| v * y[c]).sum();
    }
    let mut dphi = vec![0.0; model.mesh.num_vertices()];
    for (e, s) in sensitivities(model, iface, state)? {
        let ld = local_dofs(model, dofs, e, true);
        let tri = model.mesh.triangles()[e];
        for (l, g) in ld.iter().zip(&s.gradient) {
            for i in 0..3 {
                dphi[tri[i]] -= y_full[*l] * g[i];
            }
        }
    }
    Ok(EquilibriumAdjoint { y, dphi, shift: solver.shift })
}
