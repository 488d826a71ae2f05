//! Beta alternative for change-point p-values, calibrated from the
//! acceptance level.
//!
//! Under "no change" a p-value is uniform; under "change" it follows
//! `Be(gamma, 1)`, with `gamma` chosen so both densities agree at `alpha`:
//! `gamma * alpha^(gamma - 1) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower clamp applied to p-values before taking logarithms.
pub const P_FLOOR: f64 = 1e-300;

/// Calibrated `(alpha, gamma)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaAlternative {
    alpha: f64,
    gamma: f64,
    ln_gamma_shape: f64,
}

impl BetaAlternative {
    pub fn new(alpha: f64) -> Result<Self> {
        let gamma = solve_gamma(alpha)?;
        Ok(Self {
            alpha,
            gamma,
            ln_gamma_shape: gamma.ln(),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Log density of a p-value under "change": `ln gamma + (gamma - 1) ln p`.
    #[inline]
    pub fn log_alt_density(&self, p: f64) -> f64 {
        self.ln_gamma_shape + (self.gamma - 1.0) * p.max(P_FLOOR).ln()
    }

    pub fn log_density_p(&self, p: f64, change: bool) -> Result<f64> {
        log_density_p(p, change, self.gamma)
    }
}

/// Root of `ln g + (g - 1) ln alpha = 0` in `(0, 1)`, excluding the trivial
/// root `g = 1`.
pub fn solve_gamma(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("acceptance level must be positive, got {alpha}")));
    }
    let ln_alpha = alpha.ln();
    if ln_alpha >= -1.0 {
        return Err(Error::Calibration(format!(
            "acceptance level {alpha} must be below 1/e; the alternative collapses to the null"
        )));
    }
    // ln(g) through ln_1p near g = 1.
    let objective = |g: f64| {
        let ln_g = if g > 0.5 { (g - 1.0).ln_1p() } else { g.ln() };
        ln_g + (g - 1.0) * ln_alpha
    };
    // Concave objective: negative at alpha, maximal at -1/ln(alpha).
    let mut lo = alpha;
    let mut hi = -1.0 / ln_alpha;
    if objective(lo) >= 0.0 || objective(hi) <= 0.0 {
        return Err(Error::Calibration(format!(
            "acceptance level {alpha} is numerically indistinguishable from 1/e"
        )));
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if objective(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if objective(lo).abs() <= objective(hi).abs() { lo } else { hi })
}

/// Log density of a p-value: 0 under "no change", the Beta log density
/// under "change".
pub fn log_density_p(p: f64, change: bool, gamma: f64) -> Result<f64> {
    // p = 0 can come out of an underflowing normal tail; it is floored below.
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("p-value {p} outside (0, 1]")));
    }
    if !change {
        return Ok(0.0);
    }
    Ok(gamma.ln() + (gamma - 1.0) * p.max(P_FLOOR).ln())
}

/// Composite log-likelihood of the p-values at the change-points of `r`.
///
/// `pvals[i]` must be `Some` wherever `r[i]` is an interior change-point;
/// other entries are ignored.
pub fn log_composite_likelihood(
    pvals: &[Option<f64>],
    r: &crate::indicator::IndicatorVector,
    gamma: f64,
) -> Result<f64> {
    if pvals.len() != r.len() {
        return Err(Error::Shape(format!(
            "{} p-values for {} indicators",
            pvals.len(),
            r.len()
        )));
    }
    r.change_points().into_iter().try_fold(0.0, |acc, i| {
        let p = pvals[i].ok_or_else(|| Error::invalid(format!("missing p-value at change-point {i}")))?;
        Ok(acc + log_density_p(p, true, gamma)?)
    })
}
