use std::path::Path;

use bernoulli_detector::evaluate::{fdr_experiment, match_with_tolerance, FdrConfig, MatchResult};
use bernoulli_detector::multivariate::{run_multi, summarize_p, MultiSamplerTrace};
use bernoulli_detector::simulate::{gen_dependent, gen_piecewise, presets, replicate_seed, DependentSpec, PiecewiseSpec};
use bernoulli_detector::tv::{extract_change_points, tv_denoise};
use bernoulli_detector::univariate::{self, SamplerTrace};
use bernoulli_detector::{
    BetaAlternative, ColumnUpdate, ConfigurationSet, MultiSamplerConfig, Noise, TimeSeriesMatrix, UniSamplerConfig,
    Variant,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::{BenchFdrArgs, DetectArgs, EvaluateArgs, Method, NoiseKind, Preset, SimulateArgs, Update, VariantArg};
use crate::error::{CliError, CliResult};
use crate::io;
use crate::report::{
    ChangePointSets, DetectionReport, MetricRow, MetricsReport, RunManifest, SeriesReport, TruthFile, TruthSeries,
};

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Validation("--jobs must be at least 1".into())),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| CliError::Validation(format!("cannot start {j} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn one_based(points: &[usize]) -> Vec<usize> {
    points.iter().map(|p| p + 1).collect()
}

fn zero_based(points: &[usize], n: usize, what: &str) -> CliResult<Vec<usize>> {
    points
        .iter()
        .map(|&p| {
            if p == 0 || p > n {
                Err(CliError::Validation(format!("{what}: index {p} outside 1..={n}")))
            } else {
                Ok(p - 1)
            }
        })
        .collect()
}

fn chain_seed(seed: u64, series: usize, chain: usize) -> u64 {
    replicate_seed(replicate_seed(seed, series as u64), chain as u64)
}

pub fn detect(args: &DetectArgs) -> CliResult<()> {
    let seed = args.seed.seed;
    let bytes = io::read_bytes(&args.input)?;
    let x = io::parse_matrix(&bytes)?;
    let config_bytes = args.configs.as_deref().map(io::read_bytes).transpose()?;
    if args.replicates == 0 {
        return Err(CliError::Validation("--replicates must be at least 1".into()));
    }
    if args.method != Method::Tv {
        BetaAlternative::new(args.alpha)?;
    }
    let mut inputs: Vec<&[u8]> = vec![&bytes];
    inputs.extend(config_bytes.as_deref());
    let manifest = RunManifest::new("detect", args, seed, &inputs)?;

    let (series, log_score, config_summary) = with_pool(args.jobs, || -> CliResult<_> {
        match args.method {
            Method::BdUniPseudo => Ok((detect_uni(&x, args, Variant::Pseudo)?, None, None)),
            Method::BdUniBlocked => Ok((detect_uni(&x, args, Variant::Blocked)?, None, None)),
            Method::BdMulti => detect_multi(&x, args, config_bytes.as_deref()),
            Method::Tv => Ok((detect_tv(&x, args)?, None, None)),
        }
    })??;

    let report = DetectionReport {
        manifest,
        method: args.method.name().into(),
        n: x.len(),
        series,
        log_score,
        config_summary,
    };
    io::emit(args.out.as_deref(), io::to_json(&report)?.as_bytes())?;
    if let Some(path) = &args.csv {
        io::emit(Some(path), &flat_csv(&report)?)?;
    }
    Ok(())
}

fn averaged(marginals: impl Iterator<Item = Vec<f64>>, chains: usize) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for m in marginals {
        if acc.is_empty() {
            acc = vec![0.0; m.len()];
        }
        acc.iter_mut().zip(&m).for_each(|(a, v)| *a += v);
    }
    acc.iter_mut().for_each(|a| *a /= chains as f64);
    acc
}

fn detect_uni(x: &TimeSeriesMatrix, args: &DetectArgs, variant: Variant) -> CliResult<Vec<SeriesReport>> {
    let iterations = args.iterations.unwrap_or(1000);
    let chains = args.replicates;
    let jobs: Vec<(usize, usize)> = (0..x.n_series())
        .flat_map(|j| (0..chains).map(move |c| (j, c)))
        .collect();
    let traces: Vec<SamplerTrace> = jobs
        .par_iter()
        .map(|&(j, c)| {
            let mut cfg = UniSamplerConfig::new(args.alpha, iterations, chain_seed(args.seed.seed, j, c), variant);
            cfg.burn_in = args.burn_in;
            univariate::run(x.row(j), &cfg)
        })
        .collect::<Result<_, _>>()?;
    Ok(traces
        .chunks(chains)
        .zip(x.names())
        .map(|(group, name)| {
            let best = group
                .iter()
                .reduce(|a, b| if b.best_score > a.best_score { b } else { a })
                .expect("at least one chain");
            SeriesReport {
                name: name.clone(),
                change_points: one_based(&best.best.change_points()),
                log_score: Some(best.best_score),
                marginal: Some(averaged(group.iter().map(|t| t.marginal.clone()), chains)),
            }
        })
        .collect())
}

type MultiOutcome = (
    Vec<SeriesReport>,
    Option<f64>,
    Option<Vec<bernoulli_detector::multivariate::ConfigSummary>>,
);

fn detect_multi(x: &TimeSeriesMatrix, args: &DetectArgs, configs: Option<&[u8]>) -> CliResult<MultiOutcome> {
    let k = x.n_series();
    let set = match configs {
        Some(bytes) => {
            let text = std::str::from_utf8(bytes)
                .map_err(|_| CliError::Data("configuration file is not UTF-8".into()))?;
            ConfigurationSet::parse(k, text)?
        }
        None => ConfigurationSet::full(k)?,
    };
    let mut cfg = MultiSamplerConfig::new(args.alpha, args.iterations.unwrap_or(2000), 0);
    cfg.burn_in = args.burn_in;
    cfg.sample_p = !args.no_p_summary;
    cfg.update = match args.update {
        Update::Pseudo => ColumnUpdate::Pseudo,
        Update::Exact => ColumnUpdate::Exact,
    };
    let traces: Vec<MultiSamplerTrace> = (0..args.replicates)
        .into_par_iter()
        .map(|c| {
            let cfg = MultiSamplerConfig {
                seed: chain_seed(args.seed.seed, 0, c),
                ..cfg.clone()
            };
            run_multi(x, &cfg, &set)
        })
        .collect::<Result<_, _>>()?;
    let best = traces
        .iter()
        .reduce(|a, b| if b.best_score > a.best_score { b } else { a })
        .expect("at least one chain");
    let series = (0..k)
        .map(|j| SeriesReport {
            name: x.names()[j].clone(),
            change_points: one_based(&best.best.row(j).change_points()),
            log_score: None,
            marginal: Some(averaged(traces.iter().map(|t| t.marginal[j].clone()), traces.len())),
        })
        .collect();
    let summary = if cfg.sample_p {
        let draws: Vec<Vec<f64>> = traces
            .iter()
            .flat_map(|t| t.p_draws[cfg.burn_in..].iter().cloned())
            .collect();
        Some(summarize_p(&draws, &set)?)
    } else {
        None
    };
    Ok((series, Some(best.best_score), summary))
}

fn detect_tv(x: &TimeSeriesMatrix, args: &DetectArgs) -> CliResult<Vec<SeriesReport>> {
    x.rows()
        .iter()
        .zip(x.names())
        .map(|(row, name)| {
            let fit = tv_denoise(row, args.lambda)?;
            Ok(SeriesReport {
                name: name.clone(),
                change_points: one_based(&extract_change_points(&fit, args.threshold)?),
                log_score: None,
                marginal: None,
            })
        })
        .collect()
}

fn flat_csv(report: &DetectionReport) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["series", "index", "change", "marginal"])?;
    for s in &report.series {
        for t in 1..=report.n {
            let change = t == 1 || t == report.n || s.change_points.binary_search(&t).is_ok();
            let marginal = s.marginal.as_ref().map_or(String::new(), |m| m[t - 1].to_string());
            w.write_record([s.name.clone(), t.to_string(), u8::from(change).to_string(), marginal])?;
        }
    }
    w.into_inner().map_err(|e| CliError::Data(e.to_string()))
}

/// Scenario file contents.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Scenario {
    Piecewise(PiecewiseSpec),
    Dependent(DependentSpec),
}

impl Scenario {
    fn from_file(path: &Path) -> CliResult<(Self, Vec<u8>)> {
        let bytes = io::read_bytes(path)?;
        let scenario: Scenario = serde_json::from_slice(&bytes)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        Ok((scenario.into_zero_based()?, bytes))
    }

    fn into_zero_based(self) -> CliResult<Self> {
        Ok(match self {
            Scenario::Piecewise(mut s) => {
                s.boundaries = zero_based(&s.boundaries, s.n, "scenario boundaries")?;
                s.validate()?;
                Scenario::Piecewise(s)
            }
            Scenario::Dependent(mut s) => {
                s.source_boundaries = zero_based(&s.source_boundaries, s.n, "scenario boundaries")?;
                Scenario::Dependent(s)
            }
        })
    }
}

fn preset_scenario(args: &SimulateArgs, preset: Preset) -> CliResult<Scenario> {
    Ok(match preset {
        Preset::Sec261 => {
            let noise = match args.noise {
                NoiseKind::Gaussian => Noise::Gaussian,
                NoiseKind::Student => Noise::Student { nu: args.nu },
            };
            Scenario::Piecewise(presets::single_step(args.snr, noise)?)
        }
        Preset::Sec262 => Scenario::Piecewise(presets::fdr_instance()?),
        Preset::Sec35 => Scenario::Dependent(presets::dependent_instance()?),
    })
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let seed = args.seed.seed;
    let (scenario, input) = match (&args.scenario, args.preset) {
        (Some(path), _) => {
            let (s, bytes) = Scenario::from_file(path)?;
            (s, Some(bytes))
        }
        (None, Some(p)) => (preset_scenario(args, p)?, None),
        (None, None) => return Err(CliError::Validation("either --preset or --scenario is required".into())),
    };
    let inputs: Vec<&[u8]> = input.as_deref().into_iter().collect();
    let manifest = RunManifest::new("simulate", args, seed, &inputs)?;
    let (x, truth) = match &scenario {
        Scenario::Piecewise(spec) => {
            let x = TimeSeriesMatrix::univariate(gen_piecewise(spec, seed)?)?;
            (x, vec![spec.boundaries.clone()])
        }
        Scenario::Dependent(spec) => {
            let (x, r) = gen_dependent(spec, seed)?;
            let truth = r.rows().iter().map(|row| row.change_points()).collect();
            (x, truth)
        }
    };
    let mut csv = Vec::new();
    io::write_matrix(&mut csv, &x, &manifest)?;
    io::emit(args.out.as_deref(), &csv)?;
    if let Some(path) = &args.truth {
        let file = TruthFile {
            manifest,
            n: x.len(),
            series: x
                .names()
                .iter()
                .zip(truth)
                .map(|(name, points)| TruthSeries {
                    name: name.clone(),
                    change_points: one_based(&points),
                })
                .collect(),
        };
        io::emit(Some(path), io::to_json(&file)?.as_bytes())?;
    }
    Ok(())
}

fn read_sets(path: &Path) -> CliResult<(ChangePointSets, Vec<u8>)> {
    let bytes = io::read_bytes(path)?;
    let sets: ChangePointSets = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((sets, bytes))
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let (truth, truth_bytes) = read_sets(&args.truth)?;
    let (est, est_bytes) = read_sets(&args.report)?;
    if truth.n != est.n || truth.series.len() != est.series.len() {
        return Err(CliError::Validation(format!(
            "shape mismatch: truth has {} series of length {}, report has {} of length {}",
            truth.series.len(),
            truth.n,
            est.series.len(),
            est.n
        )));
    }
    if args.tolerance.is_empty() {
        return Err(CliError::Validation("at least one tolerance is required".into()));
    }
    let manifest = RunManifest::new("evaluate", args, 0, &[&truth_bytes, &est_bytes])?;
    let sorted = |v: &[usize], what: &str| -> CliResult<Vec<usize>> {
        let z = zero_based(v, truth.n, what)?;
        if z.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Validation(format!("{what}: indices must be sorted and distinct")));
        }
        Ok(z)
    };
    let mut rows = Vec::new();
    for &t in &args.tolerance {
        let mut pooled = MatchResult::default();
        for (ts, es) in truth.series.iter().zip(&est.series) {
            let m = match_with_tolerance(
                &sorted(&ts.change_points, "truth")?,
                &sorted(&es.change_points, "report")?,
                t,
            );
            rows.push(metric_row(&ts.name, t, &m));
            pooled.merge(&m);
        }
        rows.push(metric_row("pooled", t, &pooled));
    }
    let report = MetricsReport { manifest, rows };
    io::emit(args.out.as_deref(), io::to_json(&report)?.as_bytes())
}

fn metric_row(series: &str, tolerance: usize, m: &MatchResult) -> MetricRow {
    MetricRow {
        series: series.into(),
        tolerance,
        tp: m.tp,
        fp: m.fp,
        fn_: m.fn_,
        recall: m.recall(),
        precision: m.precision(),
    }
}

pub fn bench_fdr(args: &BenchFdrArgs) -> CliResult<()> {
    let seed = args.seed.seed;
    for &a in &args.alphas {
        BetaAlternative::new(a)?;
    }
    let (spec, input) = match &args.scenario {
        Some(path) => match Scenario::from_file(path)? {
            (Scenario::Piecewise(s), bytes) => (s, Some(bytes)),
            _ => return Err(CliError::Validation("bench-fdr needs a piecewise scenario".into())),
        },
        None => (presets::fdr_instance()?, None),
    };
    let inputs: Vec<&[u8]> = input.as_deref().into_iter().collect();
    let manifest = RunManifest::new("bench-fdr", args, seed, &inputs)?;
    let cfg = FdrConfig {
        alphas: args.alphas.clone(),
        tolerances: args.tolerances.clone(),
        replicates: args.replicates,
        iterations: args.iterations,
        variant: match args.variant {
            VariantArg::Pseudo => Variant::Pseudo,
            VariantArg::Blocked => Variant::Blocked,
        },
        seed,
    };
    let rows = with_pool(args.jobs, || fdr_experiment(&spec, &cfg))??;
    let mut out = Vec::new();
    {
        use std::io::Write;
        writeln!(out, "# {}", serde_json::to_string(&manifest)?)?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "tolerance", "fdr_mean", "fdr_std", "replicates"])?;
    for r in &rows {
        w.write_record([
            r.alpha.to_string(),
            r.tolerance.to_string(),
            r.fdr_mean.to_string(),
            r.fdr_std.to_string(),
            r.replicates.to_string(),
        ])?;
    }
    let out = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    io::emit(args.out.as_deref(), &out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_conversion() {
        assert_eq!(one_based(&[0, 4]), vec![1, 5]);
        assert_eq!(zero_based(&[1, 5], 5, "x").unwrap(), vec![0, 4]);
        assert!(zero_based(&[0], 5, "x").is_err());
        assert!(zero_based(&[6], 5, "x").is_err());
    }

    #[test]
    fn chain_seeds_are_distinct() {
        let mut seeds: Vec<u64> = (0..4).flat_map(|j| (0..4).map(move |c| chain_seed(1, j, c))).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), 16);
    }

    #[test]
    fn averaging_marginals() {
        let m = averaged(vec![vec![1.0, 0.0], vec![1.0, 0.5]].into_iter(), 2);
        assert_eq!(m, vec![1.0, 0.25]);
    }

    #[test]
    fn scenario_files_use_one_based_boundaries() {
        let json = r#"{"type":"piecewise","n":10,"boundaries":[5],"means":[0,1],"sigma":1,"noise":{"kind":"gaussian"}}"#;
        let s: Scenario = serde_json::from_str(json).unwrap();
        let Scenario::Piecewise(p) = s.into_zero_based().unwrap() else { panic!() };
        assert_eq!(p.boundaries, vec![4]);
    }
}
