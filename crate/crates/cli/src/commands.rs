//! One function per subcommand; each writes its artifacts into the output
//! directory and returns the process exit code.

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stripeforge_core::equilibrium::{
    bend_plate, reuss_voigt, static_solve_loaded, BendingSetup, HomogenizationOptions, PeriodicCell,
};
use stripeforge_core::inverse::{DesignProblem, LoadCase, Objective};
use stripeforge_core::mesh::{build_periodic_map, grid, load_obj, write_obj, PeriodicMap, TriMesh};
use stripeforge_core::optimizer::{fd_sweep, gradient_check, minimize, DesignMerit, Status};
use stripeforge_core::shell::{Material, Materials, Phase, ShellModel};
use stripeforge_core::stripes::{default_pin, level_set_transfer, phases, pin_reference, StripeSetup};
use stripeforge_core::Vec3;

use crate::config::{FieldConfig, MeshSource, ObjectiveConfig, RunConfig};
use crate::error::CliError;
use crate::output::{num, OutputDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Stripes,
    Simulate,
    Homogenize,
    Optimize,
    GradCheck,
    BenchShell,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Stripes => "stripes",
            Command::Simulate => "simulate",
            Command::Homogenize => "homogenize",
            Command::Optimize => "optimize",
            Command::GradCheck => "grad-check",
            Command::BenchShell => "bench-shell",
        }
    }
}

/// Debug dumps requested on the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dumps {
    pub periodic: bool,
    pub cut: bool,
}

pub struct Run<'a> {
    pub cfg: &'a RunConfig,
    pub seed: u64,
    pub dumps: Dumps,
    pub out: &'a mut OutputDir,
}

pub fn run(cmd: Command, r: &mut Run) -> Result<u8, CliError> {
    match cmd {
        Command::Stripes => stripes(r),
        Command::Simulate => simulate(r),
        Command::Homogenize => homogenize(r),
        Command::Optimize => optimize(r),
        Command::GradCheck => grad_check(r),
        Command::BenchShell => bench_shell(r),
    }
}

fn load_mesh(cfg: &RunConfig) -> Result<TriMesh, CliError> {
    Ok(match &cfg.mesh {
        MeshSource::Path(p) => load_obj(p)?,
        MeshSource::Grid { grid: g } => grid(g.nx, g.ny, g.lx, g.ly)?,
    })
}

fn periodic_map(cfg: &RunConfig, mesh: &TriMesh) -> Result<Option<PeriodicMap>, CliError> {
    let Some(l) = cfg.lattice else { return Ok(None) };
    let lattice = [Vec3::from(l[0]), Vec3::from(l[1])];
    Ok(Some(build_periodic_map(mesh, &lattice, 1e-6 * mesh.mean_edge_length())?))
}

fn materials(cfg: &RunConfig) -> Materials {
    Materials { soft: cfg.materials.soft.material(), stiff: cfg.materials.stiff.material() }
}

fn shell_model(cfg: &RunConfig, mesh: &TriMesh) -> Result<ShellModel, CliError> {
    let normals = mesh.vertex_normals()?;
    Ok(ShellModel::extrude(mesh.clone(), cfg.materials.h, normals, materials(cfg))?)
}

/// Mesh, optional periodic map and stripe setup.
struct Surface {
    mesh: TriMesh,
    map: Option<PeriodicMap>,
    setup: StripeSetup,
}

fn surface(r: &mut Run) -> Result<Surface, CliError> {
    let cfg = r.cfg;
    let mesh = load_mesh(cfg)?;
    let map = periodic_map(cfg, &mesh)?;
    if let (true, Some(m)) = (r.dumps.periodic, &map) {
        r.out.write_json("periodic.json", m)?;
    }
    // 1.5 stripe periods across the square root of the area by default
    let frequency = cfg.stripes.frequency.unwrap_or(3.0 * PI / mesh.total_area().sqrt());
    let setup = StripeSetup::new(mesh.clone(), map.clone(), frequency)?;
    Ok(Surface { mesh, map, setup })
}

fn read_design(path: &Path, setup: &StripeSetup) -> Result<(Vec<f64>, f64), CliError> {
    let bad = |msg: String| CliError::Invalid(format!("design {}: {msg}", path.display()));
    let mut rd = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let mut p = vec![f64::NAN; setup.num_params()];
    let mut theta = None;
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let value: f64 = rec.get(2).unwrap_or("").parse().map_err(|_| bad(format!("bad value in {rec:?}")))?;
        match rec.get(0) {
            Some("p") => {
                let v: usize = rec.get(1).unwrap_or("").parse().map_err(|_| bad(format!("bad vertex in {rec:?}")))?;
                p[setup.reduced_vertex(v)?] = value;
            }
            Some("theta") => theta = Some(value),
            other => return Err(bad(format!("unknown row kind {other:?}"))),
        }
    }
    if p.iter().any(|x| !x.is_finite()) {
        return Err(bad("missing design angles".into()));
    }
    Ok((p, theta.ok_or_else(|| bad("missing theta row".into()))?))
}

fn design_rows(setup: &StripeSetup, p: &[f64], theta: f64) -> Vec<Vec<String>> {
    let mut rows: Vec<Vec<String>> =
        p.iter().enumerate().map(|(r, x)| vec!["p".into(), setup.mesh_vertex(r).to_string(), num(*x)]).collect();
    rows.push(vec!["theta".into(), String::new(), num(theta)]);
    rows
}

/// Start design `(p, θ)` from the configured field plus seeded noise.
fn initial_design(cfg: &RunConfig, setup: &StripeSetup, seed: u64) -> Result<(Vec<f64>, f64), CliError> {
    let verts = setup.mesh.vertices();
    let (mut p, theta) = match &cfg.stripes.field {
        FieldConfig::Uniform { direction } => {
            (setup.params_from_directions(&vec![Vec3::from(*direction); verts.len()]), cfg.stripes.theta)
        }
        FieldConfig::Concentric { centre } => {
            let c = Vec3::from(*centre);
            let tiny = 1e-9 * setup.mesh.mean_edge_length();
            let dirs: Vec<Vec3> =
                verts.iter().map(|v| if (v - c).norm() > tiny { v - c } else { Vec3::x() }).collect();
            (setup.params_from_directions(&dirs), cfg.stripes.theta)
        }
        FieldConfig::Design { path } => read_design(path, setup)?,
    };
    if cfg.stripes.noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = cfg.stripes.noise;
        p.iter_mut().for_each(|x| *x += rng.random_range(-s..=s));
    }
    Ok((p, theta))
}

fn pin_index(cfg: &RunConfig, setup: &StripeSetup) -> Result<Option<usize>, CliError> {
    Ok(cfg.stripes.pin.map(|v| setup.reduced_vertex(v)).transpose()?)
}

/// Forward stripe synthesis at one design.
struct Pattern {
    lambda: f64,
    lambdas: [f64; 3],
    degenerate: bool,
    pin: usize,
    /// Per mesh vertex.
    alpha: Vec<f64>,
    phi: Vec<f64>,
    min_magnitude: f64,
}

fn synthesize(cfg: &RunConfig, setup: &StripeSetup, p: &[f64], theta: f64) -> Result<Pattern, CliError> {
    let sol = setup.solve(p)?;
    let (lambda, lambdas, degenerate) = (sol.plane.lambda, sol.plane.lambdas, sol.plane.degenerate);
    let k = pin_index(cfg, setup)?.unwrap_or_else(|| default_pin(&sol.plane));
    let pinned = pin_reference(sol.plane, k)?;
    let v = pinned.eigenvector_at(theta);
    let alpha_r = phases(&v)?;
    let ls = level_set_transfer(&alpha_r, cfg.transfer())?;
    let idx = setup.param_index();
    let min_magnitude = v.chunks_exact(2).map(|c| c[0].hypot(c[1])).fold(f64::INFINITY, f64::min);
    Ok(Pattern {
        lambda,
        lambdas,
        degenerate,
        pin: setup.mesh_vertex(k),
        alpha: idx.iter().map(|&r| alpha_r[r]).collect(),
        phi: idx.iter().map(|&r| ls.phi[r]).collect(),
        min_magnitude,
    })
}

fn write_pattern(out: &mut OutputDir, mesh: &TriMesh, pat: &Pattern) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> =
        (0..mesh.num_vertices()).map(|v| vec![v.to_string(), num(pat.alpha[v]), num(pat.phi[v])]).collect();
    out.write_csv("phases.csv", &["vertex_id", "alpha", "phi"], &rows)?;
    let mut obj = Vec::new();
    write_obj(&mut obj, mesh.vertices(), mesh.triangles(), Some(&pat.phi)).map_err(|e| CliError::io(out.path(), e))?;
    out.write("stripes.obj", &obj)
}

fn dump_cut(r: &mut Run, model: &ShellModel, iface: &stripeforge_core::shell::Interface) -> Result<(), CliError> {
    if !r.dumps.cut {
        return Ok(());
    }
    let (verts, tris, phases) = model.cut_geometry(iface);
    let tag: Vec<f64> = {
        // per-vertex phase tag: 1 for stiff sub-triangles, 0 for soft
        let mut t = vec![0.0; verts.len()];
        for (tri, ph) in tris.iter().zip(&phases) {
            if *ph == Phase::Stiff {
                tri.iter().for_each(|&i| t[i] = 1.0);
            }
        }
        t
    };
    let mut obj = Vec::new();
    write_obj(&mut obj, &verts, &tris, Some(&tag)).map_err(|e| CliError::io(r.out.path(), e))?;
    r.out.write("cut.obj", &obj)
}

#[derive(Serialize)]
struct StripesSummary {
    lambda: f64,
    lambdas: [f64; 3],
    degenerate: bool,
    frequency: f64,
    theta: f64,
    pin_vertex: usize,
    min_phase_magnitude: f64,
    num_vertices: usize,
    num_params: usize,
}

fn stripes(r: &mut Run) -> Result<u8, CliError> {
    let s = surface(r)?;
    let (p, theta) = initial_design(r.cfg, &s.setup, r.seed)?;
    let pat = synthesize(r.cfg, &s.setup, &p, theta)?;
    write_pattern(r.out, &s.mesh, &pat)?;
    r.out.write_json(
        "summary.json",
        &StripesSummary {
            lambda: pat.lambda,
            lambdas: pat.lambdas,
            degenerate: pat.degenerate,
            frequency: s.setup.frequency,
            theta,
            pin_vertex: pat.pin,
            min_phase_magnitude: pat.min_magnitude,
            num_vertices: s.mesh.num_vertices(),
            num_params: s.setup.num_params(),
        },
    )?;
    println!("lambda = {}", num(pat.lambda));
    Ok(0)
}

fn load_case(cfg: &RunConfig) -> Result<&LoadCase, CliError> {
    match &cfg.objective {
        Some(ObjectiveConfig::Match { load, .. } | ObjectiveConfig::Stiffness { load }) => Ok(load),
        _ => cfg.load.as_ref().ok_or_else(|| CliError::Invalid("simulate needs a `load` case".into())),
    }
}

#[derive(Serialize)]
struct SimulateSummary {
    energy: f64,
    gradient_norm: f64,
    iterations: usize,
    num_cut: usize,
    lambda: f64,
}

fn simulate(r: &mut Run) -> Result<u8, CliError> {
    let cfg = r.cfg;
    let case = load_case(cfg)?;
    let s = surface(r)?;
    let (p, theta) = initial_design(cfg, &s.setup, r.seed)?;
    let pat = synthesize(cfg, &s.setup, &p, theta)?;
    write_pattern(r.out, &s.mesh, &pat)?;
    let model = shell_model(cfg, &s.mesh)?;
    let iface = model.interface(&pat.phi, None)?;
    dump_cut(r, &model, &iface)?;
    let dofs = case.dofs(&model, &iface)?;
    let free = dofs.restrict(&model.rest_state(), 0.0);
    let loads = case.nodal_forces(&model);
    let eq = static_solve_loaded(&model, &iface, &dofs, loads.as_deref(), &free, &cfg.solver.newton())?;

    let nv = s.mesh.num_vertices();
    let x = &eq.state.x;
    let mid: Vec<Vec3> = (0..nv).map(|v| (x[v] + x[nv + v]) * 0.5).collect();
    let mut obj = Vec::new();
    write_obj(&mut obj, &mid, s.mesh.triangles(), Some(&pat.phi)).map_err(|e| CliError::io(r.out.path(), e))?;
    r.out.write("deformed.obj", &obj)?;
    let rows: Vec<Vec<String>> = (0..nv)
        .map(|v| {
            let u = mid[v] - s.mesh.vertex(v);
            let mut row = vec![v.to_string()];
            row.extend([mid[v].x, mid[v].y, mid[v].z, u.x, u.y, u.z, pat.phi[v]].map(num));
            row
        })
        .collect();
    r.out.write_csv("vertices.csv", &["vertex_id", "x", "y", "z", "ux", "uy", "uz", "phi"], &rows)?;
    let rep = &eq.report;
    let rows: Vec<Vec<String>> = rep
        .residuals
        .iter()
        .enumerate()
        .map(|(i, g)| vec![i.to_string(), num(*g), rep.energies.get(i).map_or(String::new(), |e| num(*e))])
        .collect();
    r.out.write_csv("residuals.csv", &["iteration", "residual", "energy"], &rows)?;
    r.out.write_json(
        "summary.json",
        &SimulateSummary {
            energy: eq.energy,
            gradient_norm: eq.gradient_norm,
            iterations: rep.iterations,
            num_cut: iface.num_cut(),
            lambda: pat.lambda,
        },
    )?;
    Ok(0)
}

fn cell(cfg: &RunConfig, s: &Surface) -> Result<PeriodicCell, CliError> {
    let map = s.map.clone().ok_or_else(|| CliError::Invalid("periodic cell needs `lattice`".into()))?;
    Ok(PeriodicCell::new(shell_model(cfg, &s.mesh)?, map)?)
}

fn homogenization_options(cfg: &RunConfig, seed: u64) -> HomogenizationOptions {
    HomogenizationOptions { newton: cfg.solver.newton(), buckling_seed: cfg.homogenize.buckling.then_some(seed) }
}

#[derive(Serialize)]
struct HomogenizeSummary {
    strain: f64,
    stiff_fraction: f64,
    reuss: f64,
    voigt: f64,
    num_cut: usize,
    lambda: f64,
    newton_iterations: Vec<usize>,
}

fn homogenize(r: &mut Run) -> Result<u8, CliError> {
    let cfg = r.cfg;
    let s = surface(r)?;
    let cell = cell(cfg, &s)?;
    let (p, theta) = initial_design(cfg, &s.setup, r.seed)?;
    let pat = synthesize(cfg, &s.setup, &p, theta)?;
    write_pattern(r.out, &s.mesh, &pat)?;
    let iface = cell.model.interface(&pat.phi, None)?;
    dump_cut(r, &cell.model, &iface)?;
    let n = cfg.homogenize.samples;
    let thetas: Vec<f64> = (0..n).map(|i| PI * i as f64 / n as f64).collect();
    let strain = cfg.homogenize.strain;
    let res = cell.stiffness_profile(&iface, &thetas, strain, &homogenization_options(cfg, r.seed), None)?;
    let rows: Vec<Vec<String>> = res.iter().map(|h| vec![num(h.state.theta), num(h.young), num(h.transverse)]).collect();
    r.out.write_csv("stiffness.csv", &["theta_rad", "k_pa", "transverse_m"], &rows)?;

    let [soft, stiff] = cell.model.phase_areas(&iface);
    let fraction = stiff / (soft + stiff);
    let m = materials(cfg);
    let (reuss, voigt) = reuss_voigt(m.soft.young(), m.stiff.young(), fraction);
    r.out.write_json(
        "summary.json",
        &HomogenizeSummary {
            strain,
            stiff_fraction: fraction,
            reuss,
            voigt,
            num_cut: iface.num_cut(),
            lambda: pat.lambda,
            newton_iterations: res.iter().map(|h| h.equilibrium.report.iterations).collect(),
        },
    )?;
    Ok(0)
}

fn design_problem(r: &mut Run) -> Result<(DesignMerit, Vec<f64>, Surface), CliError> {
    let cfg = r.cfg;
    let s = surface(r)?;
    let spec = cfg.objective.as_ref().ok_or_else(|| CliError::Invalid("this command needs an `objective`".into()))?;
    let objective = match spec {
        ObjectiveConfig::Profile { thetas, targets, strain } => Objective::Profile {
            cell: cell(cfg, &s)?,
            thetas: thetas.clone(),
            targets: targets.clone(),
            strain: *strain,
            options: homogenization_options(cfg, r.seed),
        },
        ObjectiveConfig::Match { load, target } => {
            let t = load_obj(target)?;
            Objective::Match { model: shell_model(cfg, &s.mesh)?, case: load.clone(), target: t.vertices().to_vec() }
        }
        ObjectiveConfig::Stiffness { load } => {
            Objective::Stiffness { model: shell_model(cfg, &s.mesh)?, case: load.clone() }
        }
    };
    let (p, theta) = initial_design(cfg, &s.setup, r.seed)?;
    let mut prob = DesignProblem::new(s.setup.clone(), cfg.transfer(), objective, cfg.design_weights())?;
    prob.newton = cfg.solver.newton();
    prob.pin = pin_index(cfg, &s.setup)?;
    let merit = DesignMerit::new(prob, &p, theta)?;
    Ok((merit, DesignMerit::pack(&p, theta), s))
}

#[derive(Serialize)]
struct OptimizeSummary<'a> {
    status: Status,
    message: Option<&'a str>,
    iterations: usize,
    pin_vertex: usize,
    start: &'a stripeforge_core::optimizer::IterRecord,
    end: &'a stripeforge_core::optimizer::IterRecord,
}

fn optimize(r: &mut Run) -> Result<u8, CliError> {
    let (merit, x0, s) = design_problem(r)?;
    let run = minimize(&merit, &x0, &r.cfg.optimizer, r.seed)?;
    let mut log = Vec::new();
    for rec in std::iter::once(&run.start).chain(&run.history) {
        serde_json::to_writer(&mut log, rec).expect("serializable");
        log.push(b'\n');
    }
    r.out.write("optimization.jsonl", &log)?;
    let (p, theta) = DesignMerit::split(&run.x);
    r.out.write_csv("design.csv", &["kind", "vertex_id", "value"], &design_rows(&s.setup, p, theta))?;
    let pin = merit.problem.pin.expect("pin fixed by DesignMerit");
    r.out.write_json(
        "summary.json",
        &OptimizeSummary {
            status: run.status,
            message: run.message.as_deref(),
            iterations: run.history.len(),
            pin_vertex: s.setup.mesh_vertex(pin),
            start: &run.start,
            end: run.final_record(),
        },
    )?;
    if run.status == Status::Aborted {
        return Err(CliError::Aborted(run.message.unwrap_or_default()));
    }
    if let Ok(ev) = merit.problem.evaluate(p, theta, None) {
        let idx = s.setup.param_index();
        let pat = Pattern {
            lambda: ev.lambda(),
            lambdas: ev.pinned.plane.lambdas,
            degenerate: ev.pinned.plane.degenerate,
            pin: s.setup.mesh_vertex(pin),
            alpha: idx.iter().map(|&i| ev.alpha[i]).collect(),
            phi: ev.phi.clone(),
            min_magnitude: ev.min_magnitude,
        };
        write_pattern(r.out, &s.mesh, &pat)?;
    }
    Ok(0)
}

fn grad_check(r: &mut Run) -> Result<u8, CliError> {
    let (merit, x0, _) = design_problem(r)?;
    let gc = &r.cfg.grad_check;
    let report = gradient_check(&merit, &x0, gc.probes, gc.tol, gc.step, r.seed)?;
    let header = ["coordinate", "adjoint", "fd", "rel_err"];
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| vec![e.coordinate.to_string(), num(e.adjoint), num(e.fd), num(e.rel_err)])
        .collect();
    r.out.write_csv("grad_check.csv", &header, &rows)?;
    println!("{}", header.join(","));
    for row in &rows {
        println!("{}", row.join(","));
    }
    if !gc.sweep.is_empty() {
        let k = report
            .entries
            .iter()
            .max_by(|a, b| a.adjoint.abs().total_cmp(&b.adjoint.abs()))
            .map_or(0, |e| e.coordinate);
        let sweep = fd_sweep(&merit, &x0, k, &gc.sweep)?;
        let rows: Vec<Vec<String>> =
            sweep.iter().map(|p| vec![k.to_string(), num(p.step), num(p.fd), num(p.rel_err)]).collect();
        r.out.write_csv("fd_sweep.csv", &["coordinate", "step", "fd", "rel_err"], &rows)?;
    }
    if report.pass() {
        Ok(0)
    } else {
        eprintln!("gradient check failed: max rel_err {} > {}", num(report.max_rel_err), num(report.tol));
        Ok(1)
    }
}

fn bench_shell(r: &mut Run) -> Result<u8, CliError> {
    let cfg = r.cfg;
    let b = &cfg.bench;
    let material = Material::from_young_poisson(b.young, b.poisson);
    let mut rows = Vec::new();
    for &nx in &b.resolutions {
        let setup =
            BendingSetup { radius: b.radius, thickness: cfg.materials.h, side: b.side, nx, ny: b.rows, material };
        let res = bend_plate(&setup, &cfg.solver.newton())?;
        log::info!("bench-shell nx={nx}: energy {} (kirchhoff {})", res.energy, res.kirchhoff);
        rows.push(vec![
            nx.to_string(),
            res.num_free.to_string(),
            num(res.energy),
            num(res.kirchhoff),
            num(res.relative_error()),
        ]);
    }
    r.out.write_csv("bench_shell.csv", &["resolution", "num_free", "energy", "kirchhoff", "rel_error"], &rows)?;
    Ok(0)
}
