use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use kq_core::domain::sample_uniform;
use kq_core::energy::energy_gradient;
use kq_core::kernel::kernel_matrix;
use kq_core::pwgd::run_pwgd;
use kq_core::sbq::{default_candidates, run_sbq};
use kq_core::wce::solve_optimal;
use kq_core::{DomainBox, GaussianKernel, NodeSet, ObjectiveSpec, PwgdConfig, SeededRng};

fn nodes(d: usize, n: usize) -> NodeSet {
    sample_uniform(&DomainBox::new(d).unwrap(), n, &mut SeededRng::new(1)).unwrap()
}

fn gram_and_solve(c: &mut Criterion) {
    let kernel = GaussianKernel::default();
    let mut group = c.benchmark_group("optimal_weights");
    for n in [25, 50, 100] {
        let x = nodes(2, n);
        group.bench_with_input(BenchmarkId::new("kernel_matrix", n), &x, |b, x| {
            b.iter(|| kernel_matrix(&kernel, black_box(x), 0.0).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("solve_optimal", n), &x, |b, x| {
            b.iter(|| solve_optimal(black_box(x), &kernel).unwrap())
        });
    }
    group.finish();
}

fn gradients(c: &mut Criterion) {
    let fs = ObjectiveSpec::fundamental(2, 0.6, 0.35).unwrap();
    let gauss = ObjectiveSpec::gaussian_wce(2).unwrap();
    // keep the nodes clear of the barriers
    let x = NodeSet::from_flat(2, nodes(2, 100).as_flat().iter().map(|v| 0.05 + 0.9 * v).collect()).unwrap();
    c.bench_function("energy_gradient/fundamental/100", |b| {
        b.iter(|| energy_gradient(&fs, black_box(&x), 42).unwrap())
    });
    c.bench_function("energy_gradient/gaussian/100", |b| {
        b.iter(|| energy_gradient(&gauss, black_box(&x), 42).unwrap())
    });
}

fn generators(c: &mut Criterion) {
    let domain = DomainBox::new(2).unwrap();
    let kernel = GaussianKernel::default();
    let mut group = c.benchmark_group("generators");
    group.sample_size(10);
    let spec = ObjectiveSpec::fundamental(2, 0.6, 0.35).unwrap();
    let cfg = PwgdConfig::new(1.0, 200, 1e-5, 1);
    group.bench_function("pwgd_fs/50", |b| b.iter(|| run_pwgd(&spec, 50, &cfg, &domain).unwrap()));
    let candidates = default_candidates(&domain, 50).unwrap();
    group.bench_function("sbq/50", |b| b.iter(|| run_sbq(50, &candidates, &kernel).unwrap()));
    group.finish();
}

criterion_group!(benches, gram_and_solve, gradients, generators);
criterion_main!(benches);
