use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fracmem_bench::{long_1d, point_source_2d, strategies};
use fracmem_core::run;

fn marching(c: &mut Criterion) {
    let mut group = c.benchmark_group("march_2d_300_steps");
    group.sample_size(10);
    let base = point_source_2d(0.9, 300);
    for s in strategies() {
        let cfg = base.with_strategy(s.clone());
        group.bench_with_input(BenchmarkId::from_parameter(&s), &cfg, |b, cfg| {
            b.iter(|| run(cfg).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("march_1d_4096_steps");
    group.sample_size(10);
    let base = long_1d(0.8, 4096);
    for s in strategies() {
        let cfg = base.with_strategy(s.clone());
        group.bench_with_input(BenchmarkId::from_parameter(&s), &cfg, |b, cfg| {
            b.iter(|| run(cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, marching);
criterion_main!(benches);
