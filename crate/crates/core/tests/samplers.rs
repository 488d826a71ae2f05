use bernoulli_detector::multivariate::{log_posterior_multi, run_multi, summarize_p};
use bernoulli_detector::simulate::{gen_piecewise, replicate_seed, Noise, PiecewiseSpec};
use bernoulli_detector::univariate;
use bernoulli_detector::{
    ConfigurationSet, IndicatorMatrix, MultiSamplerConfig, TimeSeriesMatrix, UniSamplerConfig, Variant,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

#[test]
fn null_signal_rarely_gets_change_points() {
    for variant in [Variant::Pseudo, Variant::Blocked] {
        let empty = (0..20)
            .filter(|&s| {
                let x = noise(100, 1000 + s);
                let cfg = UniSamplerConfig::new(0.01, 100, s, variant);
                univariate::run(&x, &cfg).unwrap().best.count_change_points() == 0
            })
            .count();
        assert!(empty >= 18, "{variant:?}: {empty}/20 empty");
    }
}

#[test]
fn constant_signal_has_no_change_points() {
    let x = vec![3.0; 60];
    let t = univariate::run(&x, &UniSamplerConfig::new(0.01, 100, 1, Variant::Pseudo)).unwrap();
    assert_eq!(t.best.count_change_points(), 0);
}

#[test]
fn step_is_found_near_its_position() {
    let spec = PiecewiseSpec::new(100, vec![49], vec![0.0, 1.0], 0.3, Noise::Gaussian).unwrap();
    for variant in [Variant::Pseudo, Variant::Blocked] {
        let x = gen_piecewise(&spec, 4).unwrap();
        let cps = univariate::run(&x, &UniSamplerConfig::new(0.01, 300, 2, variant))
            .unwrap()
            .best
            .change_points();
        assert!(cps.iter().any(|&c| c.abs_diff(49) <= 5), "{variant:?}: {cps:?}");
    }
}

#[test]
fn traces_are_reproducible() {
    let x = noise(80, 3);
    let cfg = UniSamplerConfig::new(0.05, 50, 77, Variant::Blocked);
    assert_eq!(univariate::run(&x, &cfg).unwrap(), univariate::run(&x, &cfg).unwrap());
}

#[test]
fn independent_constant_signals_give_empty_map() {
    let set = ConfigurationSet::full(3).unwrap();
    let empty = (0..10)
        .filter(|&s| {
            let x = TimeSeriesMatrix::new((0..3).map(|j| noise(120, 50 * s + j)).collect(), None).unwrap();
            let t = run_multi(&x, &MultiSamplerConfig::new(0.01, 100, s), &set).unwrap();
            t.best.rows().iter().all(|r| r.count_change_points() == 0)
        })
        .count();
    assert!(empty >= 9, "{empty}/10 empty");
}

/// Exhaustive MAP for K = 2, N = 8 under the full configuration set.
fn enumerated_map(x: &TimeSeriesMatrix, alpha: f64, set: &ConfigurationSet) -> IndicatorMatrix {
    let mut best: Option<(IndicatorMatrix, f64)> = None;
    for code in 0u64..4096 {
        let mut r = IndicatorMatrix::empty(2, 8).unwrap();
        for c in 0..6 {
            r.set_column(c + 1, code >> (2 * c) & 3).unwrap();
        }
        let s = log_posterior_multi(&r, x, alpha, set).unwrap();
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((r, s));
        }
    }
    best.unwrap().0
}

#[test]
fn pseudo_column_sampler_finds_the_enumerated_map() {
    let set = ConfigurationSet::full(2).unwrap();
    let mut agree = 0;
    for s in 0..20u64 {
        let mut rows = vec![noise(8, 900 + s), noise(8, 950 + s)];
        for v in &mut rows[0][4..] {
            *v += 3.0;
        }
        for v in &mut rows[1][(2 + (s as usize % 3))..] {
            *v += 3.0;
        }
        let x = TimeSeriesMatrix::new(rows, None).unwrap();
        let map = enumerated_map(&x, 0.1, &set);
        let t = run_multi(&x, &MultiSamplerConfig::new(0.1, 400, s), &set).unwrap();
        if t.best == map {
            agree += 1;
        }
    }
    assert!(agree >= 18, "{agree}/20 agree with enumeration");
}

#[test]
fn disjoint_change_points_favour_single_series_configurations() {
    let n = 600;
    let own = [vec![99, 299, 499], vec![149, 349], vec![199, 399, 549]];
    let rows: Vec<Vec<f64>> = own
        .iter()
        .enumerate()
        .map(|(j, b)| {
            let means = (0..=b.len()).map(|s| (s % 2) as f64 * 2.0).collect();
            let spec = PiecewiseSpec::new(n, b.clone(), means, 0.7, Noise::Gaussian).unwrap();
            gen_piecewise(&spec, replicate_seed(12, j as u64)).unwrap()
        })
        .collect();
    let x = TimeSeriesMatrix::new(rows, None).unwrap();
    let set = ConfigurationSet::full(3).unwrap();
    let mut cfg = MultiSamplerConfig::new(0.01, 600, 5);
    cfg.sample_p = true;
    let t = run_multi(&x, &cfg, &set).unwrap();
    let summary = summarize_p(&t.p_draws[100..], &set).unwrap();
    let single = |c: &str| c.matches('1').count() == 1;
    let min_single = summary
        .iter()
        .filter(|s| single(&s.config))
        .map(|s| s.median)
        .fold(f64::INFINITY, f64::min);
    let max_joint = summary
        .iter()
        .filter(|s| !single(&s.config))
        .map(|s| s.median)
        .fold(0.0, f64::max);
    assert!(max_joint <= min_single, "{summary:?}");
}

#[test]
fn restricted_configurations_never_appear() {
    let rows = vec![noise(60, 1), noise(60, 2)];
    let mut rows = rows;
    for v in &mut rows[1][30..] {
        *v += 4.0;
    }
    let x = TimeSeriesMatrix::new(rows, None).unwrap();
    let set = ConfigurationSet::parse(2, "00\n10\n").unwrap();
    let t = run_multi(&x, &MultiSamplerConfig::new(0.05, 200, 8), &set).unwrap();
    assert!(t.samples.iter().all(|s| s[1].is_empty()));
}

#[test]
fn marginals_lie_in_unit_interval() {
    let x = TimeSeriesMatrix::new(vec![noise(50, 4), noise(50, 5)], None).unwrap();
    let mut cfg = MultiSamplerConfig::new(0.05, 60, 3);
    cfg.burn_in = 10;
    let t = run_multi(&x, &cfg, &ConfigurationSet::full(2).unwrap()).unwrap();
    for row in &t.marginal {
        assert!(row.iter().all(|&m| (0.0..=1.0).contains(&m)));
        assert_eq!((row[0], row[49]), (1.0, 1.0));
    }
    let max = t.log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(max, t.best_score);
}
