use num_dual::DualSVec64;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;
use crate::par::*;
use crate::Vec3;

use super::kernel::{energy, energy_gradient, hessian, Materials, QuadPoint};
use super::material::Phase;
use super::shape::QuadraturePlan;
use super::xfem::{classify, cut_quadrature, cut_subdivide, perturb_zero, uncut_quadrature, ElementKind};

/// Extruded solid shell. Node `i` is the bottom copy of mesh vertex `i`,
/// node `nv + i` the top copy.
#[derive(Debug, Clone)]
pub struct ShellModel {
    pub mesh: TriMesh,
    pub thickness: f64,
    pub normals: Vec<Vec3>,
    pub rest: Vec<Vec3>,
    pub materials: Materials,
    /// Plan for uncut prisms.
    pub plan: QuadraturePlan,
    /// Plan applied to each of the three sub-prisms of a cut element.
    pub cut_plan: QuadraturePlan,
    uncut: Vec<Vec<QuadPoint>>,
}

/// Deformed nodal positions and enrichment coordinates, both over all
/// `2·nv` nodes. Enrichment is zero away from cut elements.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellState {
    pub x: Vec<Vec3>,
    pub xhat: Vec<Vec3>,
}

/// Level set and the element classification it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    /// Per mesh vertex, exact zeros perturbed.
    pub phi: Vec<f64>,
    pub kinds: Vec<ElementKind>,
    /// Per shell node: carries enrichment coordinates.
    pub enriched: Vec<bool>,
}

impl Interface {
    pub fn num_cut(&self) -> usize {
        self.kinds.iter().filter(|k| k.is_cut()).count()
    }

    pub fn num_enriched(&self) -> usize {
        self.enriched.iter().filter(|&&e| e).count()
    }
}

/// Element-level quantities in local ordering: positions of the six prism
/// nodes, then (cut elements only) their six enrichment coordinates.
#[derive(Debug, Clone)]
pub struct ElementEval {
    pub energy: f64,
    pub gradient: Vec<f64>,
}

/// Sensitivities of a cut element with respect to its three vertex level-set
/// values.
#[derive(Debug, Clone)]
pub struct PhiSensitivity {
    pub energy: [f64; 3],
    /// `∂g_r/∂φ_a` at `[r][a]`.
    pub gradient: Vec<[f64; 3]>,
}

pub fn extrude_shell(mesh: TriMesh, thickness: f64, normals: Vec<Vec3>, materials: Materials) -> Result<ShellModel> {
    ShellModel::extrude(mesh, thickness, normals, materials)
}

impl ShellModel {
    pub fn extrude(mesh: TriMesh, thickness: f64, normals: Vec<Vec3>, materials: Materials) -> Result<Self> {
        if !(thickness > 0.0 && thickness.is_finite()) {
            return Err(Error::InvalidInput(format!("thickness must be positive, got {thickness}")));
        }
        if normals.len() != mesh.num_vertices() {
            return Err(Error::InvalidInput(format!("{} normals for {} vertices", normals.len(), mesh.num_vertices())));
        }
        if let Some(i) = normals.iter().position(|n| (n.norm() - 1.0).abs() > 1e-6) {
            return Err(Error::InvalidInput(format!("normal {i} is not unit length")));
        }
        materials.soft.validate()?;
        materials.stiff.validate()?;
        let half = 0.5 * thickness;
        let rest: Vec<Vec3> = mesh
            .vertices()
            .iter()
            .zip(&normals)
            .map(|(x, n)| x - n * half)
            .chain(mesh.vertices().iter().zip(&normals).map(|(x, n)| x + n * half))
            .collect();
        let mut model = Self {
            mesh,
            thickness,
            normals,
            rest,
            materials,
            plan: QuadraturePlan::default(),
            cut_plan: QuadraturePlan::CUT_DEFAULT,
            uncut: Vec::new(),
        };
        model.rebuild_quadrature()?;
        Ok(model)
    }

    /// Replaces the uncut plan and recomputes cached rest gradients.
    pub fn with_plans(mut self, plan: QuadraturePlan, cut_plan: QuadraturePlan) -> Result<Self> {
        self.plan = plan;
        self.cut_plan = cut_plan;
        self.rebuild_quadrature()?;
        Ok(self)
    }

    fn rebuild_quadrature(&mut self) -> Result<()> {
        let plan = self.plan;
        let cached: Vec<Option<Vec<QuadPoint>>> = (0..self.mesh.num_triangles())
            .into_par_iter()
            .map(|e| {
                let rest = self.rest_prism(e);
                let corners_ok = (0..6).all(|k| {
                    super::kernel::rest_gradients(&rest, super::shape::node_coords(k)).is_some()
                });
                if corners_ok {
                    uncut_quadrature(&rest, &plan, Phase::Soft)
                } else {
                    None
                }
            })
            .collect();
        self.uncut = cached
            .into_iter()
            .enumerate()
            .map(|(e, q)| q.ok_or(Error::InvertedPrism(e)))
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn num_elements(&self) -> usize {
        self.mesh.num_triangles()
    }

    pub fn num_nodes(&self) -> usize {
        self.rest.len()
    }

    pub fn element_nodes(&self, e: usize) -> [usize; 6] {
        let [a, b, c] = self.mesh.triangles()[e];
        let nv = self.mesh.num_vertices();
        [a, b, c, nv + a, nv + b, nv + c]
    }

    pub fn rest_prism(&self, e: usize) -> [[f64; 3]; 6] {
        self.element_nodes(e).map(|k| {
            let x = self.rest[k];
            [x.x, x.y, x.z]
        })
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        self.uncut[e].iter().map(|q| q.weight).sum()
    }

    pub fn volume(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_volume(e)).sum()
    }

    pub fn rest_state(&self) -> ShellState {
        ShellState { x: self.rest.clone(), xhat: vec![Vec3::zeros(); self.rest.len()] }
    }

    /// Classifies elements from per-vertex level-set values. An override
    /// assigns a fixed phase to every element instead (conforming meshes).
    pub fn interface(&self, phi: &[f64], overrides: Option<&[Phase]>) -> Result<Interface> {
        let nv = self.mesh.num_vertices();
        if phi.len() != nv {
            return Err(Error::InvalidInput(format!("{} level-set values for {nv} vertices", phi.len())));
        }
        let phi: Vec<f64> = phi.iter().map(|&p| perturb_zero(p)).collect();
        let kinds: Vec<ElementKind> = match overrides {
            Some(o) if o.len() != self.num_elements() => {
                return Err(Error::InvalidInput(format!("{} phase overrides for {} elements", o.len(), self.num_elements())))
            }
            Some(o) => o.iter().map(|&p| ElementKind::Uncut(p)).collect(),
            None => self.mesh.triangles().iter().map(|t| classify(t.map(|v| phi[v]))).collect(),
        };
        let mut enriched = vec![false; 2 * nv];
        for (e, k) in kinds.iter().enumerate() {
            if k.is_cut() {
                for n in self.element_nodes(e) {
                    enriched[n] = true;
                }
            }
        }
        Ok(Interface { phi, kinds, enriched })
    }

    /// Uniform level set of one phase.
    pub fn homogeneous(&self, phase: Phase) -> Interface {
        let v = if phase == Phase::Stiff { 1.0 } else { -1.0 };
        self.interface(&vec![v; self.mesh.num_vertices()], None).unwrap_or_else(|_| unreachable!())
    }

    fn element_phi(&self, e: usize, iface: &Interface) -> [f64; 3] {
        self.mesh.triangles()[e].map(|v| iface.phi[v])
    }

    /// Local generalized nodes of element `e`.
    pub fn local_nodes(&self, e: usize, kind: ElementKind, state: &ShellState) -> Vec<[f64; 3]> {
        let nodes = self.element_nodes(e);
        let mut y: Vec<[f64; 3]> = nodes.iter().map(|&k| [state.x[k].x, state.x[k].y, state.x[k].z]).collect();
        if kind.is_cut() {
            y.extend(nodes.iter().map(|&k| [state.xhat[k].x, state.xhat[k].y, state.xhat[k].z]));
        }
        y
    }

    fn quadrature(&self, e: usize, kind: ElementKind, iface: &Interface) -> Result<Vec<QuadPoint>> {
        match kind {
            ElementKind::Uncut(phase) => {
                Ok(self.uncut[e].iter().map(|q| QuadPoint { weight: q.weight, grads: q.grads.clone(), phase }).collect())
            }
            ElementKind::Cut { lone } => cut_quadrature(&self.rest_prism(e), self.element_phi(e, iface), lone, &self.cut_plan)
                .ok_or(Error::InvertedPrism(e)),
        }
    }

    fn tag(e: usize) -> impl Fn(Error) -> Error {
        move |err| match err {
            Error::ElementInversion { element: None } => Error::ElementInversion { element: Some(e) },
            other => other,
        }
    }

    pub fn element_energy(&self, e: usize, iface: &Interface, state: &ShellState) -> Result<f64> {
        let kind = iface.kinds[e];
        let q = self.quadrature(e, kind, iface)?;
        energy(&q, &self.local_nodes(e, kind, state), &self.materials).map_err(Self::tag(e))
    }

    pub fn element_energy_gradient(&self, e: usize, iface: &Interface, state: &ShellState) -> Result<ElementEval> {
        let kind = iface.kinds[e];
        let q = self.quadrature(e, kind, iface)?;
        let (u, g) = energy_gradient(&q, &self.local_nodes(e, kind, state), &self.materials).map_err(Self::tag(e))?;
        Ok(ElementEval { energy: u, gradient: g.into_iter().flatten().collect() })
    }

    /// Dense row-major local Hessian.
    pub fn element_hessian(&self, e: usize, iface: &Interface, state: &ShellState) -> Result<Vec<f64>> {
        let kind = iface.kinds[e];
        let q = self.quadrature(e, kind, iface)?;
        hessian(&q, &self.local_nodes(e, kind, state), &self.materials).map_err(Self::tag(e))
    }

    /// Level-set sensitivities of a cut element; `None` for uncut ones.
    pub fn element_phi_sensitivity(&self, e: usize, iface: &Interface, state: &ShellState) -> Result<Option<PhiSensitivity>> {
        let ElementKind::Cut { lone } = iface.kinds[e] else {
            return Ok(None);
        };
        let phi = self.element_phi(e, iface);
        let dual: [DualSVec64<3>; 3] = [0, 1, 2].map(|i| DualSVec64::<3>::from_re(phi[i]).derivative(i));
        let q = cut_quadrature(&self.rest_prism(e), dual, lone, &self.cut_plan).ok_or(Error::InvertedPrism(e))?;
        let y: Vec<[DualSVec64<3>; 3]> =
            self.local_nodes(e, iface.kinds[e], state).iter().map(|p| p.map(DualSVec64::<3>::from_re)).collect();
        let (u, g) = energy_gradient(&q, &y, &self.materials).map_err(Self::tag(e))?;
        let eps = |d: &DualSVec64<3>| d.eps.0.map_or([0.0; 3], |m| [m[0], m[1], m[2]]);
        Ok(Some(PhiSensitivity { energy: eps(&u), gradient: g.iter().flatten().map(eps).collect() }))
    }

    /// Total elastic energy.
    pub fn energy(&self, iface: &Interface, state: &ShellState) -> Result<f64> {
        let parts: Vec<Result<f64>> =
            (0..self.num_elements()).into_par_iter().map(|e| self.element_energy(e, iface, state)).collect();
        parts.into_iter().sum()
    }

    /// Sub-triangles of cut elements on the mid-surface, for inspection.
    pub fn cut_geometry(&self, iface: &Interface) -> (Vec<Vec3>, Vec<[usize; 3]>, Vec<Phase>) {
        let (mut verts, mut tris, mut phases) = (Vec::new(), Vec::new(), Vec::new());
        for (e, kind) in iface.kinds.iter().enumerate() {
            let ElementKind::Cut { lone } = *kind else { continue };
            let t = self.mesh.triangles()[e];
            let p = t.map(|v| self.mesh.vertex(v));
            for sub in cut_subdivide(self.element_phi(e, iface), lone) {
                let base = verts.len();
                for uv in sub.verts {
                    verts.push(p[0] * (1.0 - uv[0] - uv[1]) + p[1] * uv[0] + p[2] * uv[1]);
                }
                tris.push([base, base + 1, base + 2]);
                phases.push(sub.phase);
            }
        }
        (verts, tris, phases)
    }

    /// Mid-surface area of each phase, indexed by [`Phase::index`].
    pub fn phase_areas(&self, iface: &Interface) -> [f64; 2] {
        let mut out = [0.0; 2];
        for (e, kind) in iface.kinds.iter().enumerate() {
            let area = self.mesh.triangle_area(e);
            match *kind {
                ElementKind::Uncut(p) => out[p.index()] += area,
                ElementKind::Cut { lone } => {
                    for sub in cut_subdivide(self.element_phi(e, iface), lone) {
                        out[sub.phase.index()] += area * sub.det().abs();
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{cylinder_strip, grid};
    use crate::shell::material::Material;
    use crate::shell::shape::{LineRule, TriangleRule};
    use crate::Mat3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn mats() -> Materials {
        Materials { soft: Material::new(1.0, 1.5), stiff: Material::new(30.0, 45.0) }
    }

    fn plate(n: usize, h: f64) -> ShellModel {
        let mesh = grid(n, n, 1.0, 1.0).unwrap();
        let normals = mesh.vertex_normals().unwrap();
        ShellModel::extrude(mesh, h, normals, mats()).unwrap()
    }

    fn perturbed(model: &ShellModel, iface: &Interface, rng: &mut ChaCha8Rng, amp: f64) -> ShellState {
        let mut s = model.rest_state();
        for x in &mut s.x {
            *x += Vec3::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp), rng.random_range(-amp..amp));
        }
        for (xh, &en) in s.xhat.iter_mut().zip(&iface.enriched) {
            if en {
                *xh = Vec3::new(rng.random_range(-amp..amp), rng.random_range(-amp..amp), rng.random_range(-amp..amp));
            }
        }
        s
    }

    fn wavy(model: &ShellModel) -> Vec<f64> {
        model.mesh.vertices().iter().map(|x| (7.0 * x.x + 3.0 * x.y).sin() + 0.1).collect()
    }

    #[test]
    fn planar_extrusion() {
        let m = plate(4, 2e-3);
        let nv = m.mesh.num_vertices();
        for i in 0..nv {
            assert!((m.rest[i].z + 1e-3).abs() < 1e-15);
            assert!((m.rest[nv + i].z - 1e-3).abs() < 1e-15);
        }
        assert!((m.volume() - 2e-3).abs() < 1e-15);
        let mesh = grid(2, 2, 1.0, 1.0).unwrap();
        let n = mesh.vertex_normals().unwrap();
        assert!(ShellModel::extrude(mesh.clone(), 0.0, n.clone(), mats()).is_err());
        assert!(ShellModel::extrude(mesh, -1.0, n, mats()).is_err());
    }

    #[test]
    fn inverted_prism_detected() {
        let mesh = grid(2, 2, 1.0, 1.0).unwrap();
        let mut n = mesh.vertex_normals().unwrap();
        n[4] = -n[4];
        let err = ShellModel::extrude(mesh, 3.0, n, mats()).unwrap_err();
        assert!(matches!(err, Error::InvertedPrism(_)), "{err}");
    }

    #[test]
    fn cylinder_volume() {
        let (r, h, arc, width) = (0.1, 6e-4, 1.0, 0.05);
        let mesh = cylinder_strip(r, arc, 80, width, 4).unwrap();
        let normals = mesh.vertex_normals().unwrap();
        let m = ShellModel::extrude(mesh, h, normals, mats()).unwrap();
        let exact = arc * r * h * width;
        assert!((m.volume() - exact).abs() < 1e-4 * exact, "{} {exact}", m.volume());
    }

    #[test]
    fn rest_state_and_rigid_motion() {
        let m = plate(4, 0.05);
        let iface = m.interface(&wavy(&m), None).unwrap();
        assert!(iface.num_cut() > 0);
        let s = m.rest_state();
        assert!(m.energy(&iface, &s).unwrap().abs() < 1e-14);
        for e in 0..m.num_elements() {
            let ev = m.element_energy_gradient(e, &iface, &s).unwrap();
            assert!(ev.gradient.iter().all(|g| g.abs() < 1e-12));
        }
        let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.7, 1.1);
        let moved = ShellState { x: s.x.iter().map(|x| rot * x + Vec3::new(1.0, 2.0, 3.0)).collect(), xhat: s.xhat.clone() };
        assert!(m.energy(&iface, &moved).unwrap().abs() < 1e-10);
    }

    #[test]
    fn translation_invariance_with_enrichment() {
        let m = plate(4, 0.05);
        let iface = m.interface(&wavy(&m), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = perturbed(&m, &iface, &mut rng, 0.01);
        let shifted = ShellState { x: s.x.iter().map(|x| x + Vec3::new(0.4, -1.0, 2.0)).collect(), xhat: s.xhat.clone() };
        let (a, b) = (m.energy(&iface, &s).unwrap(), m.energy(&iface, &shifted).unwrap());
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn uniform_stretch_constant_energy() {
        let m = plate(3, 0.1);
        let iface = m.homogeneous(Phase::Stiff);
        let s = m.rest_state();
        let st = ShellState { x: s.x.iter().map(|x| Vec3::new(1.05 * x.x, x.y, x.z)).collect(), xhat: s.xhat };
        let (psi, _) = m.materials.stiff.density(&Mat3::from_diagonal(&Vec3::new(1.1025, 1.0, 1.0))).unwrap();
        let u = m.energy(&iface, &st).unwrap();
        assert!((u - psi * m.volume()).abs() < 1e-10 * u);
    }

    #[test]
    fn enrichment_off_equal_materials_matches_uncut() {
        let mesh = grid(3, 3, 1.0, 1.0).unwrap();
        let normals = mesh.vertex_normals().unwrap();
        let same = Materials { soft: Material::new(2.0, 3.0), stiff: Material::new(2.0, 3.0) };
        let fine = QuadraturePlan::new(TriangleRule::Seven, LineRule::Three);
        let m = ShellModel::extrude(mesh, 0.1, normals, same).unwrap().with_plans(fine, fine).unwrap();
        let phi = wavy(&m);
        let cut = m.interface(&phi, None).unwrap();
        let plain = m.homogeneous(Phase::Stiff);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = perturbed(&m, &cut, &mut rng, 0.002);
        s.xhat.iter_mut().for_each(|v| *v = Vec3::zeros());
        for e in (0..m.num_elements()).filter(|&e| cut.kinds[e].is_cut()) {
            let a = m.element_energy(e, &cut, &s).unwrap();
            let b = m.element_energy(e, &plain, &s).unwrap();
            assert!((a - b).abs() <= 1e-8 * b.abs().max(1e-12), "{a} {b}");
        }
    }

    #[test]
    fn gradients_hessians_and_phi_sensitivity_match_fd() {
        let m = plate(3, 0.1).with_plans(QuadraturePlan::default(), QuadraturePlan::default()).unwrap();
        let phi = wavy(&m);
        let iface = m.interface(&phi, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked_cut = 0;
        for trial in 0..50 {
            let s = perturbed(&m, &iface, &mut rng, 0.01);
            let e = trial % m.num_elements();
            let kind = iface.kinds[e];
            checked_cut += kind.is_cut() as usize;
            let ev = m.element_energy_gradient(e, &iface, &s).unwrap();
            let h = m.element_hessian(e, &iface, &s).unwrap();
            let n = ev.gradient.len();
            let nodes = m.element_nodes(e);
            let step = 1e-6;
            let bump = |r: usize, d: f64| {
                let mut t = s.clone();
                let (k, comp) = (r / 3, r % 3);
                if k < 6 {
                    t.x[nodes[k]][comp] += d;
                } else {
                    t.xhat[nodes[k - 6]][comp] += d;
                }
                t
            };
            let gmax = ev.gradient.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            for r in 0..n {
                let (sp, sm) = (bump(r, step), bump(r, -step));
                let fd = (m.element_energy(e, &iface, &sp).unwrap() - m.element_energy(e, &iface, &sm).unwrap()) / (2.0 * step);
                assert!((fd - ev.gradient[r]).abs() <= 1e-5 * gmax.max(1e-8), "grad {e} {r}: {fd} {}", ev.gradient[r]);
                let gp = m.element_energy_gradient(e, &iface, &sp).unwrap().gradient;
                let gm = m.element_energy_gradient(e, &iface, &sm).unwrap().gradient;
                let hmax = h.iter().fold(0.0f64, |a, b| a.max(b.abs()));
                for c in 0..n {
                    let fdh = (gp[c] - gm[c]) / (2.0 * step);
                    assert!((fdh - h[c * n + r]).abs() <= 1e-4 * hmax, "hess {e} {r} {c}");
                }
            }
            if let Some(sens) = m.element_phi_sensitivity(e, &iface, &s).unwrap() {
                let tri = m.mesh.triangles()[e];
                for a in 0..3 {
                    let dphi = 1e-6;
                    let shifted = |d: f64| {
                        let mut p = phi.clone();
                        p[tri[a]] += d;
                        m.interface(&p, None).unwrap()
                    };
                    let (ip, im) = (shifted(dphi), shifted(-dphi));
                    let fd = (m.element_energy(e, &ip, &s).unwrap() - m.element_energy(e, &im, &s).unwrap()) / (2.0 * dphi);
                    assert!((fd - sens.energy[a]).abs() <= 1e-5 * sens.energy[a].abs().max(1e-6), "dU/dphi {fd} {}", sens.energy[a]);
                    let gp = m.element_energy_gradient(e, &ip, &s).unwrap().gradient;
                    let gm = m.element_energy_gradient(e, &im, &s).unwrap().gradient;
                    let smax = sens.gradient.iter().flatten().fold(0.0f64, |x, y| x.max(y.abs()));
                    for r in 0..n {
                        let fdg = (gp[r] - gm[r]) / (2.0 * dphi);
                        assert!((fdg - sens.gradient[r][a]).abs() <= 1e-5 * smax, "dg/dphi");
                    }
                }
            }
        }
        assert!(checked_cut > 5);
    }

    #[test]
    fn cut_plan_refinement_is_stable() {
        let m = plate(3, 0.1);
        let iface = m.interface(&wavy(&m), None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let s = perturbed(&m, &iface, &mut rng, 0.005);
        let fine = m.clone().with_plans(QuadraturePlan::default(), QuadraturePlan::new(TriangleRule::Seven, LineRule::Three)).unwrap();
        let (a, b) = (m.energy(&iface, &s).unwrap(), fine.energy(&iface, &s).unwrap());
        assert!((a - b).abs() < 1e-6 * b, "{a} {b} {}", (a - b).abs() / b);
    }

    #[test]
    fn cut_geometry_covers_cut_area() {
        let m = plate(4, 0.05);
        let iface = m.interface(&wavy(&m), None).unwrap();
        let (v, t, p) = m.cut_geometry(&iface);
        assert_eq!(t.len(), 3 * iface.num_cut());
        assert_eq!(p.len(), t.len());
        let area: f64 = t.iter().map(|t| 0.5 * (v[t[1]] - v[t[0]]).cross(&(v[t[2]] - v[t[0]])).norm()).sum();
        let cut_area: f64 = (0..m.num_elements()).filter(|&e| iface.kinds[e].is_cut()).map(|e| m.mesh.triangle_area(e)).sum();
        assert!((area - cut_area).abs() < 1e-12);
    }
}
