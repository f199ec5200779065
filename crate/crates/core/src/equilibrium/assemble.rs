use crate::error::Result;
use crate::par::*;
use crate::shell::{Interface, ShellModel, ShellState};
use crate::Vec3;

use super::dofs::DofMap;

/// Reduced energy, gradient `Pᵀ∂U/∂q` and Hessian `Pᵀ(∂²U/∂q²)P` (full
/// triplet list, duplicates summed on use).
#[derive(Debug, Clone)]
pub struct Assembled {
    pub energy: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<(usize, usize, f64)>,
}

/// Full-vector indices of the local unknowns of element `e`.
pub fn local_dofs(model: &ShellModel, dofs: &DofMap, e: usize, cut: bool) -> Vec<usize> {
    let nodes = model.element_nodes(e);
    let mut out: Vec<usize> = nodes.iter().flat_map(|&k| (0..3).map(move |c| DofMap::x_index(k, c))).collect();
    if cut {
        out.extend(nodes.iter().flat_map(|&k| (0..3).map(move |c| dofs.xhat_index(k, c))));
    }
    out
}

struct Local {
    energy: f64,
    grad: Vec<(usize, f64)>,
    hess: Vec<(usize, usize, f64)>,
}

pub fn energy(model: &ShellModel, iface: &Interface, state: &ShellState) -> Result<f64> {
    model.energy(iface, state)
}

pub fn assemble(
    model: &ShellModel,
    iface: &Interface,
    dofs: &DofMap,
    state: &ShellState,
    with_hessian: bool,
) -> Result<Assembled> {
    assemble_loaded(model, iface, dofs, state, None, with_hessian)
}

/// Adds the potential `−Σ f_n·x_n` of dead nodal forces to [`assemble`].
pub fn assemble_loaded(
    model: &ShellModel,
    iface: &Interface,
    dofs: &DofMap,
    state: &ShellState,
    loads: Option<&[Vec3]>,
    with_hessian: bool,
) -> Result<Assembled> {
    let locals: Vec<Result<Local>> = (0..model.num_elements())
        .into_par_iter()
        .map(|e| {
            let cut = iface.kinds[e].is_cut();
            let ev = model.element_energy_gradient(e, iface, state)?;
            let map = local_dofs(model, dofs, e, cut);
            let mut grad = Vec::with_capacity(map.len());
            for (r, g) in map.iter().zip(&ev.gradient) {
                let (c, v) = dofs.row(*r);
                grad.extend(c.iter().zip(v).map(|(&c, &v)| (c, v * g)));
            }
            let mut hess = Vec::new();
            if with_hessian {
                let h = model.element_hessian(e, iface, state)?;
                let n = map.len();
                hess.reserve(n * n);
                for (a, ra) in map.iter().enumerate() {
                    let (ca, va) = dofs.row(*ra);
                    if ca.is_empty() {
                        continue;
                    }
                    for (b, rb) in map.iter().enumerate() {
                        let hab = h[a * n + b];
                        if hab == 0.0 {
                            continue;
                        }
                        let (cb, vb) = dofs.row(*rb);
                        for (&i, &wi) in ca.iter().zip(va) {
                            for (&j, &wj) in cb.iter().zip(vb) {
                                hess.push((i, j, wi * wj * hab));
                            }
                        }
                    }
                }
            }
            Ok(Local { energy: ev.energy, grad, hess })
        })
        .collect();
    let mut out = Assembled { energy: 0.0, gradient: vec![0.0; dofs.num_free()], hessian: Vec::new() };
    for l in locals {
        let l = l?;
        out.energy += l.energy;
        for (c, g) in l.grad {
            out.gradient[c] += g;
        }
        out.hessian.extend(l.hess);
    }
    if let Some(f) = loads {
        let mut full = vec![0.0; dofs.num_full()];
        for (n, (fx, x)) in f.iter().zip(&state.x).enumerate() {
            out.energy -= fx.dot(x);
            for c in 0..3 {
                full[DofMap::x_index(n, c)] = -fx[c];
            }
        }
        for (g, r) in out.gradient.iter_mut().zip(dofs.reduce(&full)) {
            *g += r;
        }
    }
    Ok(out)
}
