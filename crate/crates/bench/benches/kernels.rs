use blab_bench::{desk_state, rough_field};
use blab_core::boussinesq::bouss_step;
use blab_core::lp::{besov_norm, build_partition, BesovIndex};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

const SIZES: [usize; 3] = [64, 128, 256];

fn fft_round_trip(c: &mut Criterion) {
    let mut group = c.benchmark_group("fft_round_trip");
    for n in SIZES {
        let f = rough_field(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| black_box(f.to_spectral().to_field()))
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let mut group = c.benchmark_group("bouss_step");
    group.sample_size(20);
    for n in SIZES {
        let s = desk_state(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &s, |b, s| {
            b.iter(|| black_box(bouss_step(s, 1e-3, 1.0).unwrap()))
        });
    }
    group.finish();
}

fn besov(c: &mut Criterion) {
    let mut group = c.benchmark_group("besov_norm");
    let idx = BesovIndex::new(0.5, 4.0, 2.0).unwrap();
    for n in SIZES {
        let f = rough_field(n);
        let part = build_partition(f.grid()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &f, |b, f| {
            b.iter(|| black_box(besov_norm(f, idx, &part).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(kernels, fft_round_trip, step, besov);
criterion_main!(kernels);
