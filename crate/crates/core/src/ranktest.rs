//! Two-sided Wilcoxon rank-sum (Mann-Whitney) test.
//!
//! Small tie-free samples use the exact null distribution of `U`, obtained
//! from the classical counting recursion; everything else uses the normal
//! approximation with a continuity correction and, when ties are present,
//! the tie-corrected variance.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Both sample sizes must be at most this for the exact branch.
pub const EXACT_MAX_SIZE: usize = 12;

/// How a p-value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Normal,
}

/// Rank-sum statistics for a pair of samples.
///
/// `u_y = n_y n_z + n_y (n_y + 1) / 2 - R_y`, symmetrically for `u_z`, and
/// `u = min(u_y, u_z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UStatistic {
    pub u: f64,
    pub u_y: f64,
    pub u_z: f64,
    pub n_y: usize,
    pub n_z: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankTestResult {
    pub stat: UStatistic,
    /// Two-sided p-value in `(0, 1]`.
    pub p: f64,
    pub method: Method,
}

/// Pooled midranks of `y` followed by `z`, plus the tie group sizes.
fn pooled_ranks(y: &[f64], z: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let n = y.len() + z.len();
    let mut order: Vec<(f64, usize)> = y.iter().chain(z).copied().zip(0..n).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut ranks = vec![0.0; n];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && order[end].0 == order[start].0 {
            end += 1;
        }
        // positions start+1 ..= end share their average
        let mid = (start + 1 + end) as f64 / 2.0;
        for &(_, idx) in &order[start..end] {
            ranks[idx] = mid;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

fn check_samples(y: &[f64], z: &[f64]) -> Result<()> {
    if y.is_empty() || z.is_empty() {
        return Err(Error::invalid("rank-sum test needs two non-empty samples"));
    }
    Ok(())
}

/// Rank sums `(R_y, R_z)` in the pooled sample, ties receiving midranks.
pub fn rank_sums(y: &[f64], z: &[f64]) -> Result<(f64, f64)> {
    check_samples(y, z)?;
    let (ranks, _) = pooled_ranks(y, z);
    let r_y = ranks[..y.len()].iter().sum();
    let r_z = ranks[y.len()..].iter().sum();
    Ok((r_y, r_z))
}

fn statistic_from_rank_sum(r_y: f64, n_y: usize, n_z: usize) -> UStatistic {
    let (ny, nz) = (n_y as f64, n_z as f64);
    let r_z = (ny + nz) * (ny + nz + 1.0) / 2.0 - r_y;
    let u_y = ny * nz + ny * (ny + 1.0) / 2.0 - r_y;
    let u_z = ny * nz + nz * (nz + 1.0) / 2.0 - r_z;
    UStatistic {
        u: u_y.min(u_z),
        u_y,
        u_z,
        n_y,
        n_z,
    }
}

/// The `U` statistics of `y` against `z`.
pub fn u_statistic(y: &[f64], z: &[f64]) -> Result<UStatistic> {
    let (r_y, _) = rank_sums(y, z)?;
    Ok(statistic_from_rank_sum(r_y, y.len(), z.len()))
}

/// Cumulative null distributions `P(U <= u)` for all size pairs up to
/// [`EXACT_MAX_SIZE`], indexed by `n_y * (EXACT_MAX_SIZE + 1) + n_z`.
fn exact_cdf_table() -> &'static [Vec<f64>] {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        const W: usize = EXACT_MAX_SIZE + 1;
        // counts[m][n][u] = number of arrangements of m + n ranks with U = u
        let mut counts: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); W]; W];
        for m in 0..W {
            for n in 0..W {
                counts[m][n] = if m == 0 || n == 0 {
                    vec![1.0]
                } else {
                    let mut c = vec![0.0; m * n + 1];
                    // largest pooled value belongs to the first sample (adds n
                    // to U) or to the second (adds nothing)
                    for (u, v) in counts[m - 1][n].iter().enumerate() {
                        c[u + n] += v;
                    }
                    for (u, v) in counts[m][n - 1].iter().enumerate() {
                        c[u] += v;
                    }
                    c
                };
            }
        }
        let mut table = vec![Vec::new(); W * W];
        for m in 0..W {
            for n in 0..W {
                let total: f64 = counts[m][n].iter().sum();
                let mut acc = 0.0;
                table[m * W + n] = counts[m][n]
                    .iter()
                    .map(|c| {
                        acc += c;
                        acc / total
                    })
                    .collect();
            }
        }
        table
    })
}

/// Exact two-sided p-value `min(1, 2 P(U <= u))` for tie-free samples of
/// sizes at most [`EXACT_MAX_SIZE`].
///
/// # Panics
/// If either size is zero or exceeds [`EXACT_MAX_SIZE`].
pub fn exact_pvalue(u: f64, n_y: usize, n_z: usize) -> f64 {
    assert!(
        (1..=EXACT_MAX_SIZE).contains(&n_y) && (1..=EXACT_MAX_SIZE).contains(&n_z),
        "exact p-values are tabulated for sizes 1..={EXACT_MAX_SIZE}"
    );
    let cdf = &exact_cdf_table()[n_y * (EXACT_MAX_SIZE + 1) + n_z];
    let idx = (u + 1e-9).floor().max(0.0) as usize;
    let lower = cdf[idx.min(cdf.len() - 1)];
    (2.0 * lower).min(1.0)
}

/// Normal-approximation two-sided p-value.
///
/// `tie_groups` lists the sizes of groups of equal values in the pooled
/// sample; singletons may be included or omitted.
pub fn normal_pvalue(u: f64, n_y: usize, n_z: usize, tie_groups: &[usize]) -> f64 {
    let tie_sum: f64 = tie_groups
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    normal_pvalue_tie_sum(u, n_y, n_z, tie_sum)
}

/// As [`normal_pvalue`], with the tie term `sum(t^3 - t)` precomputed.
pub(crate) fn normal_pvalue_tie_sum(u: f64, n_y: usize, n_z: usize, tie_sum: f64) -> f64 {
    let (ny, nz) = (n_y as f64, n_z as f64);
    let n = ny + nz;
    let mean = ny * nz / 2.0;
    let tie_adjust = if n > 1.0 { tie_sum / (n * (n - 1.0)) } else { 0.0 };
    let var = ny * nz / 12.0 * ((n + 1.0) - tie_adjust);
    if var <= 0.0 {
        return 1.0;
    }
    let z = (u + 0.5 - mean).min(0.0) / var.sqrt();
    // 2 * Phi(z) for z <= 0
    let p = erfc(-z / std::f64::consts::SQRT_2);
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Two-sided rank-sum test of `y` against `z`.
pub fn wilcoxon_pvalue(y: &[f64], z: &[f64]) -> Result<RankTestResult> {
    check_samples(y, z)?;
    let (ranks, ties) = pooled_ranks(y, z);
    let r_y: f64 = ranks[..y.len()].iter().sum();
    let stat = statistic_from_rank_sum(r_y, y.len(), z.len());
    Ok(dispatch(stat, &ties))
}

fn dispatch(stat: UStatistic, ties: &[usize]) -> RankTestResult {
    if ties.is_empty() && stat.n_y <= EXACT_MAX_SIZE && stat.n_z <= EXACT_MAX_SIZE {
        RankTestResult {
            stat,
            p: exact_pvalue(stat.u, stat.n_y, stat.n_z),
            method: Method::Exact,
        }
    } else {
        RankTestResult {
            stat,
            p: normal_pvalue(stat.u, stat.n_y, stat.n_z, ties),
            method: Method::Normal,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rank_sum_examples() {
        assert_eq!(rank_sums(&[1., 2., 3.], &[4., 5., 6.]).unwrap(), (6.0, 15.0));
        assert_eq!(rank_sums(&[1., 3.], &[2., 4.]).unwrap(), (4.0, 6.0));
        // three 2s share the midrank 2
        assert_eq!(rank_sums(&[2., 2.], &[2., 5.]).unwrap(), (4.0, 6.0));
        assert!(rank_sums(&[], &[1.0]).is_err());
    }

    #[test]
    fn u_examples() {
        let s = u_statistic(&[1., 2., 3.], &[4., 5., 6.]).unwrap();
        assert_eq!((s.u_y, s.u_z, s.u), (9.0, 0.0, 0.0));
        let s = u_statistic(&[1., 3.], &[2., 4.]).unwrap();
        assert_eq!((s.u_y, s.u_z, s.u), (3.0, 1.0, 1.0));
    }

    #[test]
    fn exact_examples() {
        assert!((exact_pvalue(0.0, 3, 3) - 0.1).abs() < 1e-15);
        assert_eq!(exact_pvalue(0.0, 1, 1), 1.0);
        assert_eq!(exact_pvalue(1.0, 1, 1), 1.0);
        assert_eq!(exact_pvalue(8.0, 4, 4), 1.0);
    }

    #[test]
    fn normal_moments() {
        // n_y = n_z = 10: m_U = 50, sigma_U = sqrt(175)
        let sigma = 175f64.sqrt();
        assert!((sigma - 13.228756555322953).abs() < 1e-12);
        let u = 20.0;
        let z = (u + 0.5 - 50.0) / sigma;
        let expected = erfc(-z / std::f64::consts::SQRT_2);
        assert!((normal_pvalue(u, 10, 10, &[]) - expected).abs() < 1e-15);
        assert_eq!(normal_pvalue(50.0, 10, 10, &[]), 1.0);
        assert_eq!(normal_pvalue(49.6, 10, 10, &[]), 1.0);
    }

    #[test]
    fn degenerate_all_equal() {
        let r = wilcoxon_pvalue(&[3.0; 15], &[3.0; 15]).unwrap();
        assert_eq!(r.method, Method::Normal);
        assert_eq!(r.p, 1.0);
    }

    #[test]
    fn dispatch_examples() {
        let r = wilcoxon_pvalue(&[1., 2., 3.], &[4., 5., 6.]).unwrap();
        assert_eq!(r.method, Method::Exact);
        assert!((r.p - 0.1).abs() < 1e-15);

        // ties force the normal branch even for tiny samples
        let r = wilcoxon_pvalue(&[1., 1.], &[2., 3.]).unwrap();
        assert_eq!(r.method, Method::Normal);

        // 20 zeros against 20 ones; tie-corrected variance 1025.641...,
        // z = -6.2293855, p = 4.6826824e-10 (scipy oracle)
        let r = wilcoxon_pvalue(&[0.0; 20], &[1.0; 20]).unwrap();
        assert_eq!(r.method, Method::Normal);
        assert!(r.p < 1e-6);
        assert!((r.p - 4.682682358742056e-10).abs() / 4.682682358742056e-10 < 1e-8);
    }

    proptest! {
        #[test]
        fn u_identities(y in prop::collection::vec(-5i32..5, 1..15), z in prop::collection::vec(-5i32..5, 1..15)) {
            let y: Vec<f64> = y.into_iter().map(f64::from).collect();
            let z: Vec<f64> = z.into_iter().map(f64::from).collect();
            let s = u_statistic(&y, &z).unwrap();
            let nn = (y.len() * z.len()) as f64;
            prop_assert!((s.u_y + s.u_z - nn).abs() < 1e-9);
            prop_assert!(s.u >= 0.0 && s.u <= nn / 2.0);
            let (ry, rz) = rank_sums(&y, &z).unwrap();
            let n = (y.len() + z.len()) as f64;
            prop_assert!((ry + rz - n * (n + 1.0) / 2.0).abs() < 1e-9);
        }

        #[test]
        fn invariances(y in prop::collection::vec(-100.0f64..100.0, 1..30),
                       z in prop::collection::vec(-100.0f64..100.0, 1..30),
                       shift in -50.0f64..50.0) {
            let base = wilcoxon_pvalue(&y, &z).unwrap();
            prop_assert!(base.p > 0.0 && base.p <= 1.0);
            let swapped = wilcoxon_pvalue(&z, &y).unwrap();
            prop_assert_eq!(base.p, swapped.p);
            // ranks of an affine-shifted or monotonically transformed pool
            let ys: Vec<f64> = y.iter().map(|v| v + shift.round()).collect();
            let zs: Vec<f64> = z.iter().map(|v| v + shift.round()).collect();
            let shifted = wilcoxon_pvalue(&ys, &zs).unwrap();
            prop_assert_eq!(base.stat.u, shifted.stat.u);
            let ym: Vec<f64> = y.iter().map(|v| v.powi(3)).collect();
            let zm: Vec<f64> = z.iter().map(|v| v.powi(3)).collect();
            let mono = wilcoxon_pvalue(&ym, &zm).unwrap();
            prop_assert_eq!(base.stat.u, mono.stat.u);
            prop_assert_eq!(base.p, mono.p);
        }
    }
}
