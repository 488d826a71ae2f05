//! Scoring detections against ground truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::solve_gamma;
use crate::error::{Error, Result};
use crate::simulate::{gen_piecewise, replicate_seed, PiecewiseSpec};
use crate::univariate::{self, UniSamplerConfig, Variant};

/// One-to-one matching between true and estimated change-points.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `(truth, estimate)` pairs.
    pub matched_pairs: Vec<(usize, usize)>,
}

impl MatchResult {
    pub fn recall(&self) -> f64 {
        recall(self)
    }

    pub fn precision(&self) -> f64 {
        precision(self)
    }

    /// Adds another result's counts and pairs to this one.
    pub fn merge(&mut self, other: &MatchResult) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.matched_pairs.extend_from_slice(&other.matched_pairs);
    }
}

/// Maximum one-to-one matching with `|truth - est| <= t`.
///
/// Both lists must be sorted and free of duplicates. Matching is a greedy
/// left-to-right sweep.
pub fn match_with_tolerance(truth: &[usize], est: &[usize], t: usize) -> MatchResult {
    debug_assert!(truth.windows(2).all(|w| w[0] < w[1]));
    debug_assert!(est.windows(2).all(|w| w[0] < w[1]));
    let (mut a, mut b) = (0, 0);
    let mut pairs = Vec::new();
    while a < truth.len() && b < est.len() {
        if est[b] + t < truth[a] {
            b += 1;
        } else if est[b] > truth[a] + t {
            a += 1;
        } else {
            pairs.push((truth[a], est[b]));
            a += 1;
            b += 1;
        }
    }
    MatchResult {
        tp: pairs.len(),
        fp: est.len() - pairs.len(),
        fn_: truth.len() - pairs.len(),
        matched_pairs: pairs,
    }
}

/// `TP / (TP + FN)`, or 1 when there is nothing to find.
pub fn recall(m: &MatchResult) -> f64 {
    let d = m.tp + m.fn_;
    if d == 0 {
        1.0
    } else {
        m.tp as f64 / d as f64
    }
}

/// `TP / (TP + FP)`, or 1 when nothing was reported.
pub fn precision(m: &MatchResult) -> f64 {
    let d = m.tp + m.fp;
    if d == 0 {
        1.0
    } else {
        m.tp as f64 / d as f64
    }
}

/// Mean false discovery proportion over runs of `(false, reported)` pairs;
/// runs that report nothing count as 0.
pub fn fdr_estimate(per_run: &[(usize, usize)]) -> Result<f64> {
    Ok(fdp_values(per_run)?.iter().sum::<f64>() / per_run.len().max(1) as f64)
}

fn fdp_values(per_run: &[(usize, usize)]) -> Result<Vec<f64>> {
    per_run
        .iter()
        .map(|&(v, r)| {
            if v > r {
                Err(Error::invalid(format!("{v} false positives out of {r} reported")))
            } else if r == 0 {
                Ok(0.0)
            } else {
                Ok(v as f64 / r as f64)
            }
        })
        .collect()
}

/// Settings for [`fdr_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrConfig {
    pub alphas: Vec<f64>,
    pub tolerances: Vec<usize>,
    pub replicates: usize,
    pub iterations: usize,
    pub variant: Variant,
    pub seed: u64,
}

/// One cell of the FDR table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdrRow {
    pub alpha: f64,
    pub tolerance: usize,
    pub fdr_mean: f64,
    /// Standard deviation of the per-replicate false discovery proportion.
    pub fdr_std: f64,
    pub replicates: usize,
}

impl FdrRow {
    pub fn standard_error(&self) -> f64 {
        self.fdr_std / (self.replicates as f64).sqrt()
    }
}

/// False discovery rate of the univariate MAP as a function of the
/// acceptance level.
///
/// Every acceptance level sees the same replicate datasets, drawn from
/// `scenario`. Rows come out ordered by alpha, then tolerance.
pub fn fdr_experiment(scenario: &PiecewiseSpec, cfg: &FdrConfig) -> Result<Vec<FdrRow>> {
    for &a in &cfg.alphas {
        solve_gamma(a)?;
    }
    if cfg.replicates == 0 || cfg.alphas.is_empty() || cfg.tolerances.is_empty() {
        return Err(Error::invalid("need at least one replicate, acceptance level and tolerance"));
    }
    scenario.validate()?;
    let truth = scenario.boundaries.clone();
    // per replicate: [alpha][tolerance] -> (false, reported)
    let counts: Vec<Vec<Vec<(usize, usize)>>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let data_seed = replicate_seed(cfg.seed, 2 * r as u64);
            let chain_seed = replicate_seed(cfg.seed, 2 * r as u64 + 1);
            let x = gen_piecewise(scenario, data_seed)?;
            cfg.alphas
                .iter()
                .map(|&alpha| {
                    let sampler = UniSamplerConfig::new(alpha, cfg.iterations, chain_seed, cfg.variant);
                    let est = univariate::run(&x, &sampler)?.best.change_points();
                    Ok(cfg
                        .tolerances
                        .iter()
                        .map(|&t| {
                            let m = match_with_tolerance(&truth, &est, t);
                            (m.fp, est.len())
                        })
                        .collect())
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (ai, &alpha) in cfg.alphas.iter().enumerate() {
        for (ti, &tolerance) in cfg.tolerances.iter().enumerate() {
            let runs: Vec<(usize, usize)> = counts.iter().map(|c| c[ai][ti]).collect();
            let fdp = fdp_values(&runs)?;
            let mean = fdp.iter().sum::<f64>() / fdp.len() as f64;
            let std = if fdp.len() > 1 {
                (fdp.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (fdp.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            rows.push(FdrRow {
                alpha,
                tolerance,
                fdr_mean: mean,
                fdr_std: std,
                replicates: cfg.replicates,
            });
        }
    }
    Ok(rows)
}
