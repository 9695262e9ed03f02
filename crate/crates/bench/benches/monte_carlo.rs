use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use jm_core::measurement::simulate_measurement;
use jm_core::oracle::estimate_moments;
use jm_core::{Dimension, OperatorMatrix, QuantumState, Threshold};
use std::hint::black_box;

const N: usize = 100_000;

fn moments(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate_moments");
    group.throughput(Throughput::Elements(N as u64));
    group.sample_size(10);
    let t = Threshold::new(0.4).unwrap();
    for d in [2, 5] {
        let dim = Dimension::new(d).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(d), &dim, |b, &dim| {
            b.iter(|| estimate_moments(dim, t, N, black_box(7)))
        });
    }
    group.finish();
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_measurement");
    group.throughput(Throughput::Elements(N as u64));
    group.sample_size(10);
    let d = Dimension::new(3).unwrap();
    let state = QuantumState::maximally_mixed(d);
    let basis = OperatorMatrix::identity(3);
    let t = Threshold::new(0.5).unwrap();
    group.bench_function("d=3", |b| {
        b.iter(|| simulate_measurement(&state, &basis, t, N, black_box(3)))
    });
    group.finish();
}

criterion_group!(benches, moments, simulation);
criterion_main!(benches);
