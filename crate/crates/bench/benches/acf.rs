use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use mimpact::estimators;
use mimpact_bench::simulated_series;

fn bench_acf(c: &mut Criterion) {
    let signs = simulated_series(1 << 18, 3).signs();
    let mut group = c.benchmark_group("acf");
    for max_lag in [10usize, 100, 1000] {
        group.bench_with_input(BenchmarkId::from_parameter(max_lag), &max_lag, |b, &lag| {
            b.iter(|| estimators::acf(black_box(&signs), lag).unwrap())
        });
    }
    group.finish();
    c.bench_function("hurst_periodogram", |b| {
        b.iter(|| estimators::hurst_periodogram(black_box(&signs)).unwrap())
    });
}

criterion_group!(benches, bench_acf);
criterion_main!(benches);
