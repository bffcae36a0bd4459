use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use hjd::dynamics::{backward_sweep, potential_sweep, SchemeConfig, TimeGrid};
use hjd::functionals::InteractionSpec;
use hjd::grid::{DensityField, ScalarField, TorusGrid};
use hjd::hamiltonian::HamiltonianSpec;
use hjd::par;

fn inputs(m: usize) -> (ScalarField, DensityField) {
    let g = TorusGrid::new(2, m, 8.0).unwrap();
    let phi = ScalarField::from_fn(g, |x| 0.3 * (x[0] * 0.7).sin() * (x[1] * 0.4).cos());
    let rho = ScalarField::from_fn(g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp() + 0.01);
    (phi, DensityField::normalized(rho).unwrap())
}

fn sweeps(c: &mut Criterion) {
    let tg = TimeGrid::new(0.2, 25).unwrap();
    let scheme = SchemeConfig::upwind_lf(2.0).unwrap();
    let ham = HamiltonianSpec::Quadratic;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for m in [64, 200] {
        let (phi, rho) = inputs(m);
        for (label, threads) in [("sequential", 1), ("parallel", workers)] {
            group.bench_with_input(BenchmarkId::new(format!("potential/{label}"), m), &m, |b, _| {
                par::with_threads(threads, || b.iter(|| potential_sweep(&phi, &ham, &scheme, &tg).unwrap()))
            });
            group.bench_with_input(BenchmarkId::new(format!("backward/{label}"), m), &m, |b, _| {
                par::with_threads(threads, || {
                    b.iter(|| backward_sweep(&phi, &rho, &ham, InteractionSpec::Zero, &scheme, &tg).unwrap())
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, sweeps);
criterion_main!(benches);
