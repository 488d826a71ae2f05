//! Bayesian multiple change-point detection built on rank-sum p-values.
//!
//! Each candidate change-point is scored by the two-sided Wilcoxon rank-sum
//! p-value between the segments on either side of it. P-values enter a
//! composite likelihood (uniform under "no change", `Be(gamma, 1)` under
//! "change", with `gamma` calibrated from a single acceptance level), and
//! Gibbs-type samplers search the resulting posterior over change-point
//! indicators for its maximum. The multivariate model additionally learns
//! how often each pattern of simultaneous changes across series occurs.
//!
//! Library indices are 0-based; index `0` and `n - 1` are fixed boundary
//! change-points.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod configs;
pub mod error;
pub mod evaluate;
pub mod indicator;
pub mod multivariate;
pub mod ranktest;
pub mod series;
pub mod simulate;
pub mod split;
pub mod tv;
pub mod univariate;

pub use calibration::BetaAlternative;
pub use configs::{config_counts, ConfigurationSet};
pub use error::{Error, Result};
pub use evaluate::{FdrConfig, FdrRow, MatchResult};
pub use indicator::{IndicatorMatrix, IndicatorVector, Segmentation};
pub use multivariate::{ColumnUpdate, ConfigSummary, MultiSamplerConfig, MultiSamplerTrace};
pub use ranktest::{wilcoxon_pvalue, Method, RankTestResult};
pub use series::TimeSeriesMatrix;
pub use simulate::{DependencyStructure, DependentSpec, Noise, PiecewiseSpec};
pub use split::SplitTester;
pub use tv::TVSolution;
pub use univariate::{SamplerTrace, UniSamplerConfig, Variant};
