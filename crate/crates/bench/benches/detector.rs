use std::hint::black_box;

use bernoulli_detector::multivariate::run_multi;
use bernoulli_detector::simulate::{gen_dependent, gen_piecewise, presets};
use bernoulli_detector::tv::{tv_denoise, DEFAULT_LAMBDA};
use bernoulli_detector::univariate::run_with_tester;
use bernoulli_detector::{ConfigurationSet, MultiSamplerConfig, SplitTester, UniSamplerConfig, Variant};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn fdr_series() -> Vec<f64> {
    gen_piecewise(&presets::fdr_instance().unwrap(), 7).unwrap()
}

fn split_tests(c: &mut Criterion) {
    let x = fdr_series();
    let n = x.len();
    let mut group = c.benchmark_group("split_pvalue");
    for (name, tester) in [("tables", SplitTester::with_tables(&x)), ("direct", SplitTester::direct(&x))] {
        group.bench_function(name, |b| {
            b.iter(|| {
                let mut acc = 0.0;
                for i in (10..n - 10).step_by(7) {
                    acc += tester.pvalue(0, i, n - 1);
                }
                black_box(acc)
            })
        });
    }
    group.finish();
}

fn univariate_sweeps(c: &mut Criterion) {
    let x = fdr_series();
    let tester = SplitTester::new(&x);
    let mut group = c.benchmark_group("univariate_100_sweeps");
    for variant in [Variant::Pseudo, Variant::Blocked] {
        let cfg = UniSamplerConfig::new(0.01, 100, 3, variant);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{variant:?}")), &cfg, |b, cfg| {
            b.iter(|| black_box(run_with_tester(&tester, cfg).unwrap().best_score))
        });
    }
    group.finish();
}

fn multivariate_sweeps(c: &mut Criterion) {
    let (x, _) = gen_dependent(&presets::dependent_instance().unwrap(), 11).unwrap();
    let set = ConfigurationSet::full(x.n_series()).unwrap();
    let mut cfg = MultiSamplerConfig::new(0.01, 20, 5);
    cfg.sample_p = false;
    c.bench_function("multivariate_20_sweeps", |b| {
        b.iter(|| black_box(run_multi(&x, &cfg, &set).unwrap().best_score))
    });
}

fn tv(c: &mut Criterion) {
    let x = fdr_series();
    c.bench_function("tv_denoise", |b| b.iter(|| black_box(tv_denoise(&x, DEFAULT_LAMBDA).unwrap())));
}

criterion_group!(benches, split_tests, univariate_sweeps, multivariate_sweeps, tv);
criterion_main!(benches);
