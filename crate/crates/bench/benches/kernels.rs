use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hermite_core::basis::{hermite_functions_1d, Sign};
use hermite_core::kernels::{heat_kernel, ShiftedOperator, SubordinationRule};
use std::hint::black_box;

fn hermite_table(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermite_functions_1d");
    for kmax in [20usize, 60, 200] {
        group.bench_with_input(BenchmarkId::from_parameter(kmax), &kmax, |b, &k| {
            b.iter(|| hermite_functions_1d(black_box(k), black_box(1.7)))
        });
    }
    group.finish();
}

fn kernel_points(c: &mut Criterion) {
    let op = ShiftedOperator::hermite(1);
    c.bench_function("heat_kernel", |b| {
        b.iter(|| heat_kernel(black_box(&[0.3]), black_box(&[-0.8]), black_box(0.5)).unwrap())
    });
    let mut group = c.benchmark_group("subordinated");
    for q in [16usize, 64, 256] {
        let rule = SubordinationRule::new(q).unwrap();
        group.bench_with_input(BenchmarkId::new("poisson", q), &rule, |b, rule| {
            b.iter(|| rule.poisson_kernel(black_box(&[0.3]), black_box(&[-0.8]), black_box(0.5), &op).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("g", q), &rule, |b, rule| {
            b.iter(|| rule.g_kernel(black_box(&[0.3]), black_box(&[-0.8]), black_box(0.5), &op).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("ladder", q), &rule, |b, rule| {
            b.iter(|| rule.ladder_kernel(black_box(&[0.3]), black_box(&[-0.8]), black_box(0.5), 0, Sign::Plus).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, hermite_table, kernel_points);
criterion_main!(benches);
