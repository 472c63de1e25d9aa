use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use vofrac_bench::ScalarFixture;
use vofrac_core::{direct_sweep, fast_sweep, g_row};

fn sweeps(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for p in [10u32, 12] {
        let n = 1usize << p;
        let f = ScalarFixture::new(n, 1e-10);
        group.bench_with_input(BenchmarkId::new("direct", n), &f, |b, f| {
            b.iter(|| direct_sweep(black_box(&f.trajectory), &f.schedule).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("fast", n), &f, |b, f| {
            b.iter(|| fast_sweep(black_box(&f.trajectory), &f.schedule, &f.quad).unwrap())
        });
    }
    group.finish();
}

fn coefficients(c: &mut Criterion) {
    let f = ScalarFixture::new(4096, 1e-10);
    c.bench_function("g_row k=4095", |b| {
        b.iter(|| g_row(black_box(4095), &f.schedule))
    });
}

criterion_group!(benches, sweeps, coefficients);
criterion_main!(benches);
