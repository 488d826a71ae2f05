//! Univariate detector: marginalized posterior over indicator vectors and
//! the two Gibbs-type samplers that search it.
//!
//! With a Bernoulli prior on each interior indicator and a Jeffreys
//! `Be(1/2, 1/2)` hyperprior on its probability, integrating the
//! hyperparameter out leaves
//!
//! ```text
//! ln f(R | X) = ln Γ(k + 1/2) + ln Γ(N - k - 3/2)
//!             + Σ_{i : r_i = 1} [ln γ + (γ - 1) ln p_i(R)] + const
//! ```
//!
//! where `k` counts interior change-points and `p_i(R)` is the rank-sum
//! p-value between the segments on either side of `i`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::calibration::BetaAlternative;
use crate::error::{Error, Result};
use crate::indicator::{ChangeTracker, IndicatorVector};
use crate::series::MIN_SERIES_LEN;
use crate::split::SplitTester;

/// Which single-series sampler to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Exact conditionals, with joint updates of the three indicators
    /// around each current change-point.
    Blocked,
    /// Single-site updates that ignore the effect of a flip on the
    /// neighbouring change-points' p-values.
    Pseudo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniSamplerConfig {
    pub alpha: f64,
    /// Number of full sweeps `M`; one sample is recorded per sweep.
    pub iterations: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Starting state; `None` starts with no interior change-points.
    pub initial: Option<IndicatorVector>,
    /// Sweeps excluded from the marginal frequencies (the MAP search uses
    /// every sweep).
    pub burn_in: usize,
}

impl UniSamplerConfig {
    pub fn new(alpha: f64, iterations: usize, seed: u64, variant: Variant) -> Self {
        Self {
            alpha,
            iterations,
            seed,
            variant,
            initial: None,
            burn_in: 0,
        }
    }

    fn validate(&self, n: usize) -> Result<BetaAlternative> {
        let beta = BetaAlternative::new(self.alpha)?;
        if self.iterations == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(format!(
                "burn-in {} leaves no sweeps out of {}",
                self.burn_in, self.iterations
            )));
        }
        if let Some(init) = &self.initial {
            if init.len() != n {
                return Err(Error::Shape(format!(
                    "initial state has length {}, series has {n}",
                    init.len()
                )));
            }
        }
        Ok(beta)
    }
}

/// Everything a univariate run records.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerTrace {
    /// Interior change-points after each sweep.
    pub samples: Vec<Vec<usize>>,
    /// Log posterior (up to a constant) of each recorded sample.
    pub log_scores: Vec<f64>,
    /// Highest-scoring recorded sample; the first one wins ties.
    pub best: IndicatorVector,
    pub best_score: f64,
    /// Per-index frequency of `r_i = 1` over the post burn-in sweeps.
    pub marginal: Vec<f64>,
}

/// `ln Γ(k + 1/2) + ln Γ(N - k - 3/2)` for every admissible `k`.
#[derive(Debug, Clone)]
pub(crate) struct CountPrior {
    table: Vec<f64>,
}

impl CountPrior {
    pub(crate) fn new(n: usize) -> Self {
        let nf = n as f64;
        let table = (0..=n - 2)
            .map(|k| {
                let k = k as f64;
                ln_gamma(k + 0.5) + ln_gamma(nf - k - 1.5)
            })
            .collect();
        Self { table }
    }

    #[inline]
    pub(crate) fn get(&self, k: usize) -> f64 {
        self.table[k]
    }
}

/// Data term of one change-point `c` between change-points `a < c < b`.
#[inline]
pub(crate) fn change_term(tester: &SplitTester, beta: &BetaAlternative, a: usize, c: usize, b: usize) -> f64 {
    beta.log_alt_density(tester.pvalue(a, c, b))
}

/// Data term over all interior change-points of the tracker.
pub(crate) fn data_term(state: &ChangeTracker, tester: &SplitTester, beta: &BetaAlternative) -> f64 {
    let pts: Vec<usize> = state.points().collect();
    pts.windows(3)
        .map(|w| change_term(tester, beta, w[0], w[1], w[2]))
        .sum()
}

/// Log marginalized posterior of `r` given the series `x`, up to an additive
/// constant shared by every indicator vector of that length.
pub fn log_posterior_uni(r: &IndicatorVector, x: &[f64], alpha: f64) -> Result<f64> {
    if r.len() != x.len() {
        return Err(Error::Shape(format!(
            "indicators have length {}, series has {}",
            r.len(),
            x.len()
        )));
    }
    let beta = BetaAlternative::new(alpha)?;
    let tester = SplitTester::direct(x);
    let state = ChangeTracker::from_indicator(r);
    Ok(CountPrior::new(x.len()).get(state.count()) + data_term(&state, &tester, &beta))
}

/// Pseudo-Gibbs probability that `r_i = 1` given its p-value and the number
/// of other interior change-points.
pub fn conditional_prob_pseudo(p: f64, k_without: usize, n: usize, gamma: f64) -> f64 {
    debug_assert!(n >= MIN_SERIES_LEN && k_without <= n - 3);
    let log_alt = gamma.ln() + (gamma - 1.0) * p.max(crate::calibration::P_FLOOR).ln();
    pseudo_prob_from_log(log_alt, k_without, n)
}

#[inline]
fn pseudo_prob_from_log(log_alt: f64, k_without: usize, n: usize) -> f64 {
    let k = k_without as f64;
    let log_odds = (k + 0.5).ln() + log_alt - (n as f64 - k - 2.5).ln();
    1.0 / (1.0 + (-log_odds).exp())
}

/// Conditional MAP of a lone candidate change-point with prior
/// probability `q`.
pub fn map_single_cp(p: f64, q: f64, gamma: f64) -> bool {
    let ratio = gamma * p.max(crate::calibration::P_FLOOR).powf(gamma - 1.0);
    ratio > (1.0 - q) / q
}

/// Conditional posterior mean of a lone candidate change-point.
pub fn mmse_single_cp(p: f64, q: f64, gamma: f64) -> f64 {
    let ratio = gamma * p.max(crate::calibration::P_FLOOR).powf(gamma - 1.0);
    ratio * q / (1.0 - q + ratio * q)
}

/// Runs the sampler named by `cfg.variant`.
pub fn run(x: &[f64], cfg: &UniSamplerConfig) -> Result<SamplerTrace> {
    check_series(x)?;
    let tester = SplitTester::new(x);
    run_with_tester(&tester, cfg)
}

/// Pseudo-Gibbs sampler.
pub fn run_pseudo(x: &[f64], cfg: &UniSamplerConfig) -> Result<SamplerTrace> {
    run(x, &UniSamplerConfig {
        variant: Variant::Pseudo,
        ..cfg.clone()
    })
}

/// Blocked Gibbs sampler.
pub fn run_blocked(x: &[f64], cfg: &UniSamplerConfig) -> Result<SamplerTrace> {
    run(x, &UniSamplerConfig {
        variant: Variant::Blocked,
        ..cfg.clone()
    })
}

fn check_series(x: &[f64]) -> Result<()> {
    if x.len() < MIN_SERIES_LEN {
        return Err(Error::data(format!(
            "series length {} is below the minimum of {MIN_SERIES_LEN}",
            x.len()
        )));
    }
    if let Some(t) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::data(format!("non-finite value at time {}", t + 1)));
    }
    Ok(())
}

/// Runs a sampler against a prebuilt tester.
pub fn run_with_tester(tester: &SplitTester, cfg: &UniSamplerConfig) -> Result<SamplerTrace> {
    let n = tester.len();
    let beta = cfg.validate(n)?;
    let prior = CountPrior::new(n);
    let initial = match &cfg.initial {
        Some(r) => r.clone(),
        None => IndicatorVector::empty(n)?,
    };
    let mut state = ChangeTracker::from_indicator(&initial);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (1..n - 1).collect();
    let mut visited = vec![false; n];
    let mut weights = Vec::with_capacity(8);

    let mut samples = Vec::with_capacity(cfg.iterations);
    let mut log_scores = Vec::with_capacity(cfg.iterations);
    let mut best: Option<(IndicatorVector, f64)> = None;
    let mut hits = vec![0usize; n];

    for sweep in 0..cfg.iterations {
        order.shuffle(&mut rng);
        match cfg.variant {
            Variant::Pseudo => {
                for &i in &order {
                    let lo = state.prev(i);
                    let hi = state.next(i);
                    let log_alt = change_term(tester, &beta, lo, i, hi);
                    let k_without = state.count() - state.get(i) as usize;
                    let prob = pseudo_prob_from_log(log_alt, k_without, n);
                    let draw: f64 = rng.random();
                    state.set(i, draw < prob);
                }
            }
            Variant::Blocked => {
                visited.iter_mut().for_each(|v| *v = false);
                for &i in &order {
                    if visited[i] {
                        continue;
                    }
                    let (first, last) = block_bounds(i, n, state.get(i));
                    resample_block(&mut state, first, last, tester, &beta, &prior, &mut rng, &mut weights);
                    visited[first..=last].iter_mut().for_each(|v| *v = true);
                }
            }
        }

        let score = prior.get(state.count()) + data_term(&state, tester, &beta);
        let points = state.interior_points();
        if sweep >= cfg.burn_in {
            for &p in &points {
                hits[p] += 1;
            }
        }
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((state.to_indicator(), score));
        }
        samples.push(points);
        log_scores.push(score);
    }

    let kept = (cfg.iterations - cfg.burn_in) as f64;
    let mut marginal: Vec<f64> = hits.iter().map(|&h| h as f64 / kept).collect();
    marginal[0] = 1.0;
    marginal[n - 1] = 1.0;
    let (best, best_score) = best.expect("at least one sweep");
    Ok(SamplerTrace {
        samples,
        log_scores,
        best,
        best_score,
        marginal,
    })
}

/// Interior indices updated together when visiting `i`: the triple around
/// a current change-point (clipped at the boundaries), otherwise `i` alone.
fn block_bounds(i: usize, n: usize, is_change: bool) -> (usize, usize) {
    if is_change {
        ((i - 1).max(1), (i + 1).min(n - 2))
    } else {
        (i, i)
    }
}

/// Draws the interior indicators `first..=last` jointly from their exact
/// conditional. Only the p-values inside the block and at the nearest
/// change-point on either side depend on the block's contents.
#[allow(clippy::too_many_arguments)]
fn resample_block(
    state: &mut ChangeTracker,
    first: usize,
    last: usize,
    tester: &SplitTester,
    beta: &BetaAlternative,
    prior: &CountPrior,
    rng: &mut ChaCha8Rng,
    weights: &mut Vec<f64>,
) {
    let n = state.len();
    for b in first..=last {
        state.set(b, false);
    }
    let lo = state.prev(first);
    let hi = state.next(last);
    let lo_prev = (lo > 0).then(|| state.prev(lo));
    let hi_next = (hi < n - 1).then(|| state.next(hi));
    let k_rest = state.count();
    let width = last - first + 1;

    weights.clear();
    let mut chain = [0usize; 5];
    for mask in 0u32..1 << width {
        chain[0] = lo;
        let mut len = 1;
        for b in 0..width {
            if mask >> b & 1 == 1 {
                chain[len] = first + b;
                len += 1;
            }
        }
        chain[len] = hi;
        len += 1;
        let mut score = prior.get(k_rest + mask.count_ones() as usize);
        if let Some(a) = lo_prev {
            score += change_term(tester, beta, a, lo, chain[1]);
        }
        for t in 1..len - 1 {
            score += change_term(tester, beta, chain[t - 1], chain[t], chain[t + 1]);
        }
        if let Some(b) = hi_next {
            score += change_term(tester, beta, chain[len - 2], hi, b);
        }
        weights.push(score);
    }

    let mask = sample_log_weights(weights, rng);
    for b in 0..width {
        if mask >> b & 1 == 1 {
            state.set(first + b, true);
        }
    }
}

/// Draws an index with probability proportional to `exp(log_weights)`.
/// Normalizes the weights in place.
pub(crate) fn sample_log_weights<R: Rng>(log_weights: &mut [f64], rng: &mut R) -> usize {
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for w in log_weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    let mut target = rng.random::<f64>() * total;
    for (k, w) in log_weights.iter().enumerate() {
        target -= w;
        if target < 0.0 {
            return k;
        }
    }
    log_weights.len() - 1
}
