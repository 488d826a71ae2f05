//! Synthetic piecewise-constant benchmarks.
//!
//! Boundaries are 0-based indices of the last point of each segment, the
//! same convention as change-points.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicator::{IndicatorMatrix, IndicatorVector};
use crate::series::{TimeSeriesMatrix, MIN_SERIES_LEN};

/// Observation noise around the segment means.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Noise {
    Gaussian,
    /// Student-t with `nu > 2` degrees of freedom, scaled so its standard
    /// deviation is `sigma`.
    Student { nu: f64 },
}

/// Piecewise-constant signal plus i.i.d. noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSpec {
    pub n: usize,
    pub boundaries: Vec<usize>,
    pub means: Vec<f64>,
    /// Noise standard deviation.
    pub sigma: f64,
    pub noise: Noise,
}

impl PiecewiseSpec {
    pub fn new(n: usize, boundaries: Vec<usize>, means: Vec<f64>, sigma: f64, noise: Noise) -> Result<Self> {
        let spec = Self {
            n,
            boundaries,
            means,
            sigma,
            noise,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "length {} is below the minimum of {MIN_SERIES_LEN}",
                self.n
            )));
        }
        check_boundaries(&self.boundaries, self.n)?;
        if self.means.len() != self.boundaries.len() + 1 {
            return Err(Error::invalid(format!(
                "{} means for {} segments",
                self.means.len(),
                self.boundaries.len() + 1
            )));
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("segment means must be finite"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(format!("noise scale {} must be finite and non-negative", self.sigma)));
        }
        if let Noise::Student { nu } = self.noise {
            if !(nu > 2.0) {
                return Err(Error::invalid(format!("Student-t degrees of freedom {nu} must exceed 2")));
            }
        }
        Ok(())
    }

    /// Noise-free signal.
    pub fn mean_function(&self) -> Vec<f64> {
        step_levels(self.n, &self.boundaries, &self.means)
    }

    pub fn truth(&self) -> Result<IndicatorVector> {
        IndicatorVector::from_change_points(self.n, &self.boundaries)
    }
}

fn check_boundaries(boundaries: &[usize], n: usize) -> Result<()> {
    if boundaries.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("boundaries must be strictly increasing"));
    }
    if let Some(&b) = boundaries.iter().find(|&&b| b == 0 || b + 1 >= n) {
        return Err(Error::invalid(format!("boundary {b} is not interior for length {n}")));
    }
    Ok(())
}

fn step_levels(n: usize, boundaries: &[usize], levels: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for t in 0..n {
        out.push(levels[seg]);
        if seg < boundaries.len() && t == boundaries[seg] {
            seg += 1;
        }
    }
    out
}

/// Noise scale giving `snr_db = 10 log10(delta_mu^2 / sigma^2)`.
pub fn snr_to_sigma(delta_mu: f64, snr_db: f64) -> Result<f64> {
    if delta_mu == 0.0 || !delta_mu.is_finite() || !snr_db.is_finite() {
        return Err(Error::invalid("SNR needs a finite, non-zero mean jump"));
    }
    Ok(delta_mu.abs() / 10f64.powf(snr_db / 20.0))
}

/// Mean jump giving `snr_db` at noise scale `sigma`.
pub fn snr_to_jump(sigma: f64, snr_db: f64) -> f64 {
    sigma * 10f64.powf(snr_db / 20.0)
}

fn noise_sampler(noise: Noise, sigma: f64) -> Box<dyn Fn(&mut ChaCha8Rng) -> f64> {
    match noise {
        Noise::Gaussian => Box::new(move |rng| {
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        }),
        Noise::Student { nu } => {
            let t = StudentT::new(nu).expect("validated degrees of freedom");
            let scale = sigma * ((nu - 2.0) / nu).sqrt();
            Box::new(move |rng| scale * t.sample(rng))
        }
    }
}

/// Draws one realization of `spec`.
pub fn gen_piecewise(spec: &PiecewiseSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = noise_sampler(spec.noise, spec.sigma);
    Ok(spec.mean_function().into_iter().map(|m| m + noise(&mut rng)).collect())
}

/// Propagation probabilities between series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependencyStructure {
    /// `weights[k][l]`: probability that a change-point of series `k`
    /// also occurs in series `l`.
    pub weights: Vec<Vec<f64>>,
}

impl DependencyStructure {
    pub fn new(weights: Vec<Vec<f64>>) -> Result<Self> {
        let k = weights.len();
        if k == 0 || weights.iter().any(|row| row.len() != k) {
            return Err(Error::invalid("weights must form a non-empty square matrix"));
        }
        for (a, row) in weights.iter().enumerate() {
            if row.iter().any(|w| !(0.0..=1.0).contains(w)) {
                return Err(Error::invalid("weights must lie in [0, 1]"));
            }
            if row[a] != 1.0 {
                return Err(Error::invalid("a series always shares its own change-points"));
            }
        }
        Ok(Self { weights })
    }

    /// Series 0 drives every other series with the given probabilities.
    pub fn from_source(propagation: &[f64]) -> Result<Self> {
        let k = propagation.len() + 1;
        let mut weights = vec![vec![0.0; k]; k];
        for (a, row) in weights.iter_mut().enumerate() {
            row[a] = 1.0;
        }
        weights[0][1..].copy_from_slice(propagation);
        Self::new(weights)
    }

    pub fn n_series(&self) -> usize {
        self.weights.len()
    }
}

/// Multivariate signals whose change-points all originate in series 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependentSpec {
    pub n: usize,
    pub source_boundaries: Vec<usize>,
    pub structure: DependencyStructure,
    /// Size of every level step; the sign of each step is random.
    pub delta_mu: f64,
    pub sigma: f64,
    pub noise: Noise,
}

/// Draws data and the true indicators for a [`DependentSpec`].
///
/// Each boundary of series 0 is copied to series `l` with probability
/// `weights[0][l]`. Every series then walks through its own boundaries with
/// independent steps of `±delta_mu`, starting from level 0.
pub fn gen_dependent(spec: &DependentSpec, seed: u64) -> Result<(TimeSeriesMatrix, IndicatorMatrix)> {
    check_boundaries(&spec.source_boundaries, spec.n)?;
    if spec.n < MIN_SERIES_LEN {
        return Err(Error::invalid(format!("length {} is too short", spec.n)));
    }
    let k = spec.structure.n_series();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(k);
    let mut truth = Vec::with_capacity(k);
    for l in 0..k {
        let w = spec.structure.weights[0][l];
        let boundaries: Vec<usize> = spec
            .source_boundaries
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < w)
            .collect();
        let mut levels = Vec::with_capacity(boundaries.len() + 1);
        let mut level = 0.0;
        levels.push(level);
        for _ in &boundaries {
            level += if rng.random::<bool>() { spec.delta_mu } else { -spec.delta_mu };
            levels.push(level);
        }
        let series = PiecewiseSpec::new(spec.n, boundaries.clone(), levels, spec.sigma, spec.noise)?;
        rows.push(gen_piecewise(&series, rng.next_u64())?);
        truth.push(IndicatorVector::from_change_points(spec.n, &boundaries)?);
    }
    Ok((TimeSeriesMatrix::new(rows, None)?, IndicatorMatrix::new(truth)?))
}

/// Independent seed for replicate `r` of a run seeded with `seed`.
pub fn replicate_seed(seed: u64, r: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng.next_u64()
}

/// Ready-made benchmark scenarios.
pub mod presets {
    use super::*;

    /// `N = 100` with one change after the 50th point.
    ///
    /// Gaussian noise uses means `(0, 1)`; Student-t noise fixes the noise
    /// variance at `nu / (nu - 2)` and sizes the jump from the SNR.
    pub fn single_step(snr_db: f64, noise: Noise) -> Result<PiecewiseSpec> {
        let (sigma, jump) = match noise {
            Noise::Gaussian => (snr_to_sigma(1.0, snr_db)?, 1.0),
            Noise::Student { nu } => {
                let sigma = (nu / (nu - 2.0)).sqrt();
                (sigma, snr_to_jump(sigma, snr_db))
            }
        };
        PiecewiseSpec::new(100, vec![49], vec![0.0, jump], sigma, noise)
    }

    /// `N = 320`, 16 segments of 20 points alternating between 0 and 1, SNR 5 dB.
    pub fn fdr_instance() -> Result<PiecewiseSpec> {
        let boundaries: Vec<usize> = (1..16).map(|s| 20 * s - 1).collect();
        let means = (0..16).map(|s| (s % 2) as f64).collect();
        PiecewiseSpec::new(320, boundaries, means, snr_to_sigma(1.0, 5.0)?, Noise::Gaussian)
    }

    /// Four series of 1000 points; series 1 has 20 segments and propagates
    /// its change-points with probabilities `(0.9, 0.6, 0.2)`, SNR 0 dB.
    pub fn dependent_instance() -> Result<DependentSpec> {
        Ok(DependentSpec {
            n: 1000,
            source_boundaries: (1..20).map(|s| 50 * s - 1).collect(),
            structure: DependencyStructure::from_source(&[0.9, 0.6, 0.2])?,
            delta_mu: 1.0,
            sigma: 1.0,
            noise: Noise::Gaussian,
        })
    }
}
