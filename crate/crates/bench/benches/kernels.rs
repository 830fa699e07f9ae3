use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use spectral_lab::hausdorff::{partition_level, PhaseFamily};
use spectral_lab::random::ensemble_growth;
use spectral_lab::{propagate, propagate_naive};
use spectral_lab_bench::fixture;

fn bench_propagate(c: &mut Criterion) {
    let mut group = c.benchmark_group("propagate");
    for depth in [50usize, 500, 2000] {
        let (spec, e) = fixture(0.5, 2, depth, 1.3);
        group.bench_with_input(BenchmarkId::from_parameter(depth), &depth, |b, _| {
            b.iter(|| propagate(black_box(&spec), &e, 0.0).unwrap())
        });
    }
    group.finish();
}

fn bench_naive(c: &mut Criterion) {
    // the site-by-site oracle, for comparison at a depth both can reach
    let (spec, e) = fixture(0.5, 2, 16, 1.3);
    c.bench_function("naive/depth16", |b| b.iter(|| propagate_naive(black_box(&spec), &e, 0.0, (1 << 16) + 2).unwrap()));
}

fn bench_ensemble(c: &mut Criterion) {
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    group.bench_function("500x50", |b| b.iter(|| ensemble_growth(0.5, 2, black_box(2f64.sqrt()), 500, 50, 7).unwrap()));
    group.finish();
}

fn bench_partition(c: &mut Criterion) {
    let mut group = c.benchmark_group("partition");
    group.sample_size(10);
    let linear = PhaseFamily::Linear { beta: 1.0, gamma: 10.0 };
    group.bench_function("linear/n4", |b| b.iter(|| partition_level(&linear, (1.0, 2.0), 4, 1e-3).unwrap()));
    let trace = PhaseFamily::Trace { v: 0.2, gamma: 10 };
    group.bench_function("trace/n3", |b| b.iter(|| partition_level(&trace, (1.0, 2.0), 3, 1e-3).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_propagate, bench_naive, bench_ensemble, bench_partition);
criterion_main!(benches);
