//! Total-variation denoising (the 1D fused-lasso signal approximator) as a
//! change-point baseline.
//!
//! Minimizes `1/2 Σ (x_i - θ_i)^2 + λ Σ |θ_{i+1} - θ_i|` exactly with
//! Condat's direct algorithm, then reports the indices where the fit jumps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 22.3;
pub const DEFAULT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TVSolution {
    pub fitted: Vec<f64>,
    pub lambda: f64,
}

impl TVSolution {
    pub fn objective(&self, x: &[f64]) -> f64 {
        tv_objective(x, &self.fitted, self.lambda)
    }
}

pub fn tv_objective(x: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let fit: f64 = x.iter().zip(theta).map(|(a, b)| (a - b).powi(2)).sum();
    let tv: f64 = theta.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    0.5 * fit + lambda * tv
}

/// Exact TV denoising in linear time (typically).
pub fn tv_denoise(x: &[f64], lambda: f64) -> Result<TVSolution> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    if let Some(t) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::data(format!("non-finite value at time {}", t + 1)));
    }
    let fitted = if lambda == 0.0 || x.len() < 2 {
        x.to_vec()
    } else if lambda >= lambda_max(x) {
        vec![x.iter().sum::<f64>() / x.len() as f64; x.len()]
    } else {
        condat(x, lambda)
    };
    Ok(TVSolution { fitted, lambda })
}

fn condat(y: &[f64], lambda: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    let (mut k, mut k0, mut kplus, mut kminus) = (0usize, 0usize, 0usize, 0usize);
    let mut umin = lambda;
    let mut umax = -lambda;
    let mut vmin = y[0] - lambda;
    let mut vmax = y[0] + lambda;
    let two_lambda = 2.0 * lambda;
    loop {
        while k == n - 1 {
            if umin < 0.0 {
                loop {
                    out[k0] = vmin;
                    k0 += 1;
                    if k0 > kminus {
                        break;
                    }
                }
                k = k0;
                kminus = k0;
                vmin = y[k0];
                umin = lambda;
                umax = vmin + umin - vmax;
            } else if umax > 0.0 {
                loop {
                    out[k0] = vmax;
                    k0 += 1;
                    if k0 > kplus {
                        break;
                    }
                }
                k = k0;
                kplus = k0;
                vmax = y[k0];
                umax = -lambda;
                umin = vmax + umax - vmin;
            } else {
                vmin += umin / (k - k0 + 1) as f64;
                for v in &mut out[k0..=k] {
                    *v = vmin;
                }
                return out;
            }
        }
        umin += y[k + 1] - vmin;
        if umin < -lambda {
            loop {
                out[k0] = vmin;
                k0 += 1;
                if k0 > kminus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmin = y[k0];
            vmax = vmin + two_lambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        umax += y[k + 1] - vmax;
        if umax > lambda {
            loop {
                out[k0] = vmax;
                k0 += 1;
                if k0 > kplus {
                    break;
                }
            }
            k = k0;
            kminus = k0;
            kplus = k0;
            vmax = y[k0];
            vmin = vmax - two_lambda;
            umin = lambda;
            umax = -lambda;
            continue;
        }
        k += 1;
        if umin >= lambda {
            kminus = k;
            vmin += (umin - lambda) / (kminus - k0 + 1) as f64;
            umin = lambda;
        }
        if umax <= -lambda {
            kplus = k;
            vmax += (umax + lambda) / (kplus - k0 + 1) as f64;
            umax = -lambda;
        }
    }
}

/// Interior indices `i` with `|θ_{i+1} - θ_i| > threshold`, i.e. the last
/// point of each fitted segment. A jump right after the first point lands on
/// the fixed boundary and is not reported.
pub fn extract_change_points(sol: &TVSolution, threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > 0.0) {
        return Err(Error::invalid(format!("threshold must be positive, got {threshold}")));
    }
    Ok(sol
        .fitted
        .windows(2)
        .enumerate()
        .skip(1)
        .filter(|(_, w)| (w[1] - w[0]).abs() > threshold)
        .map(|(i, _)| i)
        .collect())
}

/// Smallest `λ` whose solution is constant.
pub fn lambda_max(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let mut run = 0.0f64;
    let mut max = 0.0f64;
    for v in &x[..x.len() - 1] {
        run += v - mean;
        max = max.max(run.abs());
    }
    max
}

/// Outcome of the optimality check.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// Largest `|u_k|` over all gaps, where `u` is the dual vector.
    pub max_dual: f64,
    /// Largest `|u_k - λ sign(θ_{k+1} - θ_k)|` over the jumps.
    pub max_jump_violation: f64,
    /// `|Σ (x_i - θ_i)|`.
    pub residual_sum: f64,
    pub passed: bool,
}

/// Checks the subgradient optimality conditions of `sol` for data `x`.
///
/// The dual vector is `u_k = Σ_{i <= k} (θ_i - x_i)`. The fit is optimal iff
/// every `|u_k| <= λ`, `u_k = λ sign(θ_{k+1} - θ_k)` wherever the fit jumps
/// and the residuals sum to zero.
pub fn kkt_check(x: &[f64], sol: &TVSolution, tol: f64) -> KktReport {
    let n = x.len();
    let lambda = sol.lambda;
    let theta = &sol.fitted;
    let scale = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let jump_eps = 1e-12 * scale;
    let mut u = 0.0;
    let mut max_dual = 0.0f64;
    let mut max_jump_violation = 0.0f64;
    for k in 0..n.saturating_sub(1) {
        u += theta[k] - x[k];
        max_dual = max_dual.max(u.abs());
        let d = theta[k + 1] - theta[k];
        if d.abs() > jump_eps {
            max_jump_violation = max_jump_violation.max((u - lambda * d.signum()).abs());
        }
    }
    let residual_sum = x.iter().zip(theta).map(|(a, b)| a - b).sum::<f64>().abs();
    let passed = n == theta.len()
        && max_dual <= lambda + tol
        && max_jump_violation <= tol
        && residual_sum <= tol;
    KktReport {
        max_dual,
        max_jump_violation,
        residual_sum,
        passed,
    }
}

/// Projected coordinate descent on the dual box-constrained problem.
///
/// Much slower than [`tv_denoise`] and used as an independent reference.
pub fn tv_denoise_dual_cd(x: &[f64], lambda: f64, max_sweeps: usize, tol: f64) -> TVSolution {
    let n = x.len();
    if n < 2 {
        return TVSolution {
            fitted: x.to_vec(),
            lambda,
        };
    }
    // θ = x - Dᵀu with (Dᵀu)_i = u_{i-1} - u_i
    let mut u = vec![0.0; n - 1];
    for _ in 0..max_sweeps {
        let mut change = 0.0f64;
        for k in 0..n - 1 {
            let left = if k > 0 { u[k - 1] } else { 0.0 };
            let right = if k + 2 < n { u[k + 1] } else { 0.0 };
            let target = 0.5 * ((x[k + 1] + right) - (x[k] - left));
            let new = target.clamp(-lambda, lambda);
            change = change.max((new - u[k]).abs());
            u[k] = new;
        }
        if change < tol {
            break;
        }
    }
    let fitted = (0..n)
        .map(|i| {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let here = if i < n - 1 { u[i] } else { 0.0 };
            x[i] - left + here
        })
        .collect();
    TVSolution { fitted, lambda }
}
