//! Output documents. Every index leaving the tool is 1-based.

use bernoulli_detector::multivariate::ConfigSummary;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliResult;

/// Provenance block embedded in every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: u64,
    /// SHA-256 over the input files, each prefixed by its length.
    pub input_digest: Option<String>,
}

impl RunManifest {
    pub fn new<P: Serialize>(command: &str, parameters: &P, seed: u64, inputs: &[&[u8]]) -> CliResult<Self> {
        Ok(Self {
            tool: "bdetect".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            parameters: serde_json::to_value(parameters)?,
            seed,
            input_digest: (!inputs.is_empty()).then(|| digest(inputs)),
        })
    }
}

pub fn digest(inputs: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for bytes in inputs {
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub name: String,
    pub change_points: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_score: Option<f64>,
    /// Probability of a change at each time index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginal: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub manifest: RunManifest,
    pub method: String,
    pub n: usize,
    pub series: Vec<SeriesReport>,
    /// Joint log score of the multivariate MAP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_score: Option<f64>,
    /// Configuration probabilities given at least one change.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_summary: Option<Vec<ConfigSummary>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSeries {
    pub name: String,
    pub change_points: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub manifest: RunManifest,
    pub n: usize,
    pub series: Vec<TruthSeries>,
}

/// The part of a truth file or report that scoring needs.
#[derive(Debug, Clone, Deserialize)]
pub struct ChangePointSets {
    pub n: usize,
    pub series: Vec<TruthSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub series: String,
    pub tolerance: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub recall: f64,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub manifest: RunManifest,
    pub rows: Vec<MetricRow>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_separates_inputs() {
        assert_ne!(digest(&[b"ab", b"c"]), digest(&[b"a", b"bc"]));
        assert_eq!(digest(&[b"x"]), digest(&[b"x"]));
        assert_eq!(digest(&[b"x"]).len(), 64);
    }

    #[test]
    fn report_parses_as_change_point_sets() {
        let m = RunManifest::new("detect", &serde_json::json!({"a": 1}), 3, &[]).unwrap();
        let r = DetectionReport {
            manifest: m,
            method: "tv".into(),
            n: 10,
            series: vec![SeriesReport {
                name: "s1".into(),
                change_points: vec![4],
                log_score: None,
                marginal: None,
            }],
            log_score: None,
            config_summary: None,
        };
        let back: ChangePointSets = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!((back.n, back.series[0].change_points.clone()), (10, vec![4]));
    }
}
