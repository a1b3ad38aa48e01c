//! Criterion benchmarks for the numeric kernels: the banded survival
//! DP, the fluctuation-identity recurrence, the limit-law quadratures,
//! and the Monte Carlo samplers.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ladder_core::increments::{IncrementModel, ModelSpec};
use ladder_core::ladder::{marginal_nonneg_probs, spitzer_recurrence, survival_dp};
use ladder_core::limits::{brownian_correction, moment_constant, spectrally_positive_correction};
use ladder_core::monte_carlo::{estimate_tail, tilted_estimate_tail};
use ladder_core::stable::StableParams;

fn heavy_corpus(drift: &str) -> IncrementModel {
    IncrementModel::from_spec(ModelSpec::ParetoTail {
        span: 1.0,
        exponent: 3.5,
        coeff: 13.5,
        start: 10,
        drift: Some(drift.into()),
    })
    .unwrap()
}

fn bench_survival_dp(c: &mut Criterion) {
    let mut g = c.benchmark_group("survival_dp");
    let biased = IncrementModel::biased_pm1("0.05").unwrap();
    for n in [250u64, 1000, 4000] {
        g.bench_with_input(BenchmarkId::new("biased_pm1", n), &n, |b, &n| {
            b.iter(|| survival_dp(black_box(&biased), n).unwrap())
        });
    }
    let heavy = heavy_corpus("0.05");
    for n in [250u64, 1000] {
        g.bench_with_input(BenchmarkId::new("pareto_t3.5", n), &n, |b, &n| {
            b.iter(|| survival_dp(black_box(&heavy), n).unwrap())
        });
    }
    g.finish();
}

fn bench_spitzer_route(c: &mut Criterion) {
    let model = IncrementModel::biased_pm1("0.1").unwrap();
    let n = 500u64;
    c.bench_function("marginal_nonneg_probs/500", |b| {
        b.iter(|| marginal_nonneg_probs(black_box(&model), n).unwrap())
    });
    let marginals = marginal_nonneg_probs(&model, n).unwrap();
    c.bench_function("spitzer_recurrence/500", |b| {
        b.iter(|| spitzer_recurrence(black_box(&marginals)).unwrap())
    });
}

fn bench_limit_laws(c: &mut Criterion) {
    c.bench_function("brownian_correction/u=1", |b| {
        b.iter(|| brownian_correction(black_box(1.0)).unwrap())
    });
    c.bench_function("spectrally_positive_correction/alpha=1.5,u=1", |b| {
        b.iter(|| spectrally_positive_correction(black_box(1.5), black_box(1.0)).unwrap())
    });
    let p2 = StableParams::new(2.0, 0.0).unwrap();
    c.bench_function("moment_constant/r=1", |b| {
        b.iter(|| moment_constant(black_box(1.0), &p2).unwrap())
    });
}

fn bench_monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(20);
    let biased = IncrementModel::biased_pm1("0.1").unwrap();
    g.bench_function("plain_tail/n=64/100k-paths", |b| {
        b.iter(|| estimate_tail(black_box(&biased), 64, 100_000, 1).unwrap())
    });
    g.bench_function("tilted_tail/n=200/50k-paths", |b| {
        b.iter(|| tilted_estimate_tail(black_box(&biased), 200, 50_000, 1).unwrap())
    });
    let heavy = heavy_corpus("0.1");
    g.bench_function("heavy_tail_sampler/n=64/50k-paths", |b| {
        b.iter(|| estimate_tail(black_box(&heavy), 64, 50_000, 1).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_survival_dp,
    bench_spitzer_route,
    bench_limit_laws,
    bench_monte_carlo
);
criterion_main!(benches);
