use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stripeforge_core::equilibrium::assemble;
use stripeforge_core::inverse::LoadCase;
use stripeforge_core::mesh::grid;
use stripeforge_core::shell::{Material, Materials, ShellModel};
use stripeforge_core::stripes::StripeSetup;
use stripeforge_core::Vec3;

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let seq = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let par = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("sequential", seq), ("parallel", par)]
}

fn shell_assembly(c: &mut Criterion) {
    let n = 32;
    let mesh = grid(n, n, 0.01, 0.01).unwrap();
    let normals = vec![Vec3::z(); mesh.num_vertices()];
    let mats = Materials { soft: Material::from_young_poisson(1e6, 0.3), stiff: Material::from_young_poisson(1e7, 0.3) };
    let model = ShellModel::extrude(mesh, 1e-3, normals, mats).unwrap();
    let phi: Vec<f64> = model.mesh.vertices().iter().map(|v| (v.x * 900.0).sin() + 0.2).collect();
    let iface = model.interface(&phi, None).unwrap();
    let case = LoadCase { clamped: (0..=n).collect(), ..Default::default() };
    let dofs = case.dofs(&model, &iface).unwrap();
    let state = model.rest_state();

    let mut g = c.benchmark_group("shell_assembly");
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new(name, n), |b| {
            b.iter(|| pool.install(|| assemble(&model, &iface, &dofs, &state, true).unwrap()))
        });
    }
    g.finish();
}

fn stripe_solve(c: &mut Criterion) {
    let n = 24;
    let s = StripeSetup::new(grid(n, n, 1.0, 1.0).unwrap(), None, 20.0).unwrap();
    let dirs: Vec<Vec3> = s.mesh.vertices().iter().map(|v| Vec3::new(1.0, 0.3 * v.y, 0.0)).collect();
    let p = s.params_from_directions(&dirs);

    let mut g = c.benchmark_group("stripe_solve");
    g.sample_size(20);
    for (name, pool) in pools() {
        g.bench_function(BenchmarkId::new(name, n), |b| b.iter(|| pool.install(|| s.solve(&p).unwrap())));
    }
    g.finish();
}

criterion_group!(benches, shell_assembly, stripe_solve);
criterion_main!(benches);
