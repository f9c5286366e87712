use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lraa_bench::factored;
use lraa_core::cross::{cold_start, cross_deim, CrossConfig};
use lraa_core::lowrank::{lstsq_lowrank, round_sum, TruncationSpec};
use lraa_core::problems::make_test_oracle;

fn bench_round_sum(c: &mut Criterion) {
    let mut group = c.benchmark_group("round_sum");
    for &(n, r) in &[(256, 10), (1024, 10), (1024, 40)] {
        let terms: Vec<_> = (0..6).map(|k| factored(n, n, r, k)).collect();
        let weighted: Vec<_> = terms.iter().enumerate().map(|(k, t)| (1.0 / (k + 1) as f64, t)).collect();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{n}_r{r}")), &weighted, |b, w| {
            b.iter(|| round_sum(black_box(w), TruncationSpec::with_eps(1e-8)).unwrap())
        });
    }
    group.finish();
}

fn bench_lstsq(c: &mut Criterion) {
    let mut group = c.benchmark_group("lstsq_lowrank");
    for &(n, window) in &[(512, 3), (512, 5), (2048, 5)] {
        let d: Vec<_> = (0..window).map(|k| factored(n, n, 8, 100 + k as u64)).collect();
        let rhs = factored(n, n, 8, 999);
        group.bench_function(format!("{n}x{n}_w{window}"), |b| {
            b.iter(|| lstsq_lowrank(black_box(&d), black_box(&rhs)).unwrap())
        });
    }
    group.finish();
}

fn bench_cross_deim(c: &mut Criterion) {
    let mut group = c.benchmark_group("cross_deim");
    group.sample_size(20);
    for &(name, n, eps) in &[("G1", 100, 1e-8), ("G2", 500, 1e-4), ("H1", 500, 1e-2)] {
        let g = make_test_oracle(name, n, n, 0.3).unwrap();
        let (u0, v0) = cold_start(n, n, 1);
        let cfg = CrossConfig::new(eps, n, n).with_seed(1);
        group.bench_function(format!("{name}_{n}_eps{eps:e}"), |b| {
            b.iter(|| cross_deim(&g, black_box(&u0), black_box(&v0), &cfg).unwrap())
        });
    }
    group.finish();
}

criterion_group!(kernels, bench_round_sum, bench_lstsq, bench_cross_deim);
criterion_main!(kernels);
