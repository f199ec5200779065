//! Ridge enrichment, cut-element subdivision and resolution checks.
//!
//! Level-set values live on the mid-surface triangle and are shared by the
//! top and bottom nodes, so the interface is a ruled surface through the
//! thickness and the ridge function depends on `(u, v)` only.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::stripes::TransferParams;

use super::kernel::{rest_gradients, QuadPoint, Real};
use super::material::Phase;
use super::shape::QuadraturePlan;

/// Nodal level-set values of exactly zero are replaced by this.
pub const ZERO_PERTURBATION: f64 = 1e-9;

pub fn perturb_zero(phi: f64) -> f64 {
    if phi == 0.0 {
        ZERO_PERTURBATION
    } else {
        phi
    }
}

/// How an element is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Uncut(Phase),
    /// Cut, with `lone` the local vertex alone on its side.
    Cut { lone: usize },
}

impl ElementKind {
    pub fn is_cut(&self) -> bool {
        matches!(self, ElementKind::Cut { .. })
    }
}

/// Classifies a triangle from its (perturbed) vertex level-set values.
pub fn classify(phi: [f64; 3]) -> ElementKind {
    let pos = phi.map(|p| perturb_zero(p) > 0.0);
    match pos.iter().filter(|&&p| p).count() {
        0 => ElementKind::Uncut(Phase::Soft),
        3 => ElementKind::Uncut(Phase::Stiff),
        n => {
            let lone_is_pos = n == 1;
            ElementKind::Cut { lone: (0..3).find(|&i| pos[i] == lone_is_pos).unwrap_or(0) }
        }
    }
}

/// `ψ = Σ|N_i φ_i| − |Σ N_i φ_i|` over the six prism nodes.
pub fn ridge(n: &[f64; 6], phi: &[f64; 6]) -> f64 {
    let a: f64 = n.iter().zip(phi).map(|(n, p)| (n * p).abs()).sum();
    let b: f64 = n.iter().zip(phi).map(|(n, p)| n * p).sum();
    a - b.abs()
}

fn abs<T: Real>(x: T) -> T {
    if x.re() < 0.0 {
        -x
    } else {
        x
    }
}

/// Nodal coefficients `c_a = |φ_a| − s φ_a` of the ridge on a sub-region of
/// sign `s`, so that `ψ = Σ c_a L_a` there.
pub fn ridge_coefficients<T: Real>(phi: [T; 3], sign: f64) -> [T; 3] {
    phi.map(|p| abs(p) - p * sign)
}

/// Sub-triangle in parent `(u, v)` coordinates with its material.
#[derive(Debug, Clone, Copy)]
pub struct SubTriangle<T = f64> {
    pub verts: [[T; 2]; 3],
    pub phase: Phase,
}

impl<T: Real> SubTriangle<T> {
    /// Twice the signed area in parent coordinates.
    pub fn det(&self) -> T {
        let [p0, p1, p2] = self.verts;
        (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])
    }
}

const PARENT_UV: [[f64; 2]; 3] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];

/// Splits a cut triangle along the straight interface into the lone-vertex
/// triangle and two triangles covering the remaining quadrilateral.
pub fn cut_subdivide<T: Real>(phi: [T; 3], lone: usize) -> [SubTriangle<T>; 3] {
    let c = lone;
    let (a, b) = ((c + 1) % 3, (c + 2) % 3);
    let vert = |i: usize| PARENT_UV[i].map(T::from);
    let cross = |i: usize| {
        let s = phi[i] / (phi[i] - phi[c]);
        let (vi, vc) = (vert(i), vert(c));
        [vi[0] + (vc[0] - vi[0]) * s, vi[1] + (vc[1] - vi[1]) * s]
    };
    let (pac, pbc) = (cross(a), cross(b));
    let lone_phase = Phase::of(phi[c].re());
    let other = Phase::of(phi[a].re());
    [
        SubTriangle { verts: [vert(c), pac, pbc], phase: lone_phase },
        SubTriangle { verts: [vert(a), vert(b), pbc], phase: other },
        SubTriangle { verts: [vert(a), pbc, pac], phase: other },
    ]
}

fn sign_of(phase: Phase) -> f64 {
    match phase {
        Phase::Stiff => 1.0,
        Phase::Soft => -1.0,
    }
}

/// Quadrature of an uncut prism; `None` if the rest prism is inverted at a
/// point.
pub fn uncut_quadrature(rest: &[[f64; 3]; 6], plan: &QuadraturePlan, phase: Phase) -> Option<Vec<QuadPoint>> {
    plan.points()
        .into_iter()
        .map(|(q, w)| {
            let (det, _, g) = rest_gradients(rest, q)?;
            Some(QuadPoint { weight: w * det, grads: g.to_vec(), phase })
        })
        .collect()
}

/// Quadrature of a cut prism over twelve generalized nodes (six positions,
/// six enrichment coordinates). Generic in the level-set scalar so that
/// derivatives flow through both the ridge and the interface geometry.
pub fn cut_quadrature<T: Real>(
    rest: &[[f64; 3]; 6],
    phi: [T; 3],
    lone: usize,
    plan: &QuadraturePlan,
) -> Option<Vec<QuadPoint<T>>> {
    let points = plan.points();
    let mut out = Vec::with_capacity(3 * points.len());
    for sub in cut_subdivide(phi, lone) {
        let jac = abs(sub.det());
        let coef = ridge_coefficients(phi, sign_of(sub.phase));
        let [p0, p1, p2] = sub.verts;
        for &(q, w) in &points {
            let u = p0[0] + (p1[0] - p0[0]) * q[0] + (p2[0] - p0[0]) * q[1];
            let v = p0[1] + (p1[1] - p0[1]) * q[0] + (p2[1] - p0[1]) * q[1];
            let (det, n, g) = rest_gradients(rest, [u, v, T::from(q[2])])?;
            let l = [n[0] + n[3], n[1] + n[4], n[2] + n[5]];
            let psi = coef[0] * l[0] + coef[1] * l[1] + coef[2] * l[2];
            let mut dpsi = [T::from(0.0); 3];
            for a in 0..3 {
                for d in 0..3 {
                    dpsi[d] += coef[a] * (g[a][d] + g[a + 3][d]);
                }
            }
            let mut grads = g.to_vec();
            for k in 0..6 {
                grads.push([0, 1, 2].map(|d| psi * g[k][d] + n[k] * dpsi[d]));
            }
            out.push(QuadPoint { weight: jac * det * w, grads, phase: sub.phase });
        }
    }
    Some(out)
}

/// Phase change along an edge, wrapped to `(−π, π]`.
pub fn wrapped_difference(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Phases at which the level set changes sign, in `[0, π]`; `None` if it
/// never does.
pub fn zero_crossing_phase(params: TransferParams) -> Option<f64> {
    let c = -(0.5 * PI * params.a2).sin() / (1.0 - params.a1);
    (c.abs() <= 1.0).then(|| c.acos())
}

/// Number of level-set sign changes met when the phase moves from `a` by `d`.
pub fn crossings_on_interval(a: f64, d: f64, root: f64) -> usize {
    let (lo, hi) = if d >= 0.0 { (a, a + d) } else { (a + d, a) };
    let count = |r: f64| {
        let k_lo = ((lo - r) / TAU).ceil() as i64;
        let k_hi = ((hi - r) / TAU).floor() as i64;
        (k_hi - k_lo + 1).max(0) as usize
    };
    if root == 0.0 || root == PI {
        count(root)
    } else {
        count(root) + count(-root)
    }
}

/// Diagnostics of the resolution check.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResolutionReport {
    /// Largest number of interfaces crossed along one edge.
    pub max_crossings: usize,
    /// Triangles around which the phase winds (stripe singularities).
    pub singular_triangles: Vec<usize>,
}

/// Verifies that no mesh edge spans more than one interface of the true
/// stripe pattern, whose phase advances by `omega[e]` along edge `e`
/// (oriented from `v[0]` to `v[1]`); vertex-linear level sets would
/// silently miss the extra interface.
pub fn check_resolution(
    mesh: &TriMesh,
    alpha: &[f64],
    omega: &[f64],
    params: TransferParams,
) -> Result<ResolutionReport> {
    if alpha.len() != mesh.num_vertices() || omega.len() != mesh.num_edges() {
        return Err(Error::InvalidInput(format!(
            "{} phases and {} edge angles for {} vertices and {} edges",
            alpha.len(),
            omega.len(),
            mesh.num_vertices(),
            mesh.num_edges()
        )));
    }
    let mut report = ResolutionReport::default();
    if let Some(root) = zero_crossing_phase(params) {
        for (e, w) in mesh.edges().iter().zip(omega) {
            let n = crossings_on_interval(alpha[e.v[0]], *w, root);
            report.max_crossings = report.max_crossings.max(n);
            if n >= 2 {
                return Err(Error::ResolutionTooLow(e.faces[0].unwrap_or(0)));
            }
        }
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let w: f64 = (0..3).map(|k| wrapped_difference(alpha[tri[k]], alpha[tri[(k + 1) % 3]])).sum();
        if w.abs() > PI {
            report.singular_triangles.push(t);
        }
    }
    if !report.singular_triangles.is_empty() {
        log::warn!("{} triangles contain stripe singularities", report.singular_triangles.len());
    }
    Ok(report)
}
