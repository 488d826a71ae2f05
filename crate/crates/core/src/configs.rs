//! Admissible column patterns for the multivariate model.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::indicator::IndicatorMatrix;

/// Largest series count for which the full set `{0,1}^K` is built implicitly.
pub const MAX_FULL_SET_SERIES: usize = 12;

/// The set of column configurations a sampler may visit, with their
/// Dirichlet pseudo-counts.
///
/// A configuration is stored as a bit mask where bit `j` marks series `j`.
/// Its text form lists series in order, so `"1100"` means series 1 and 2
/// change together.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigurationSet {
    n_series: usize,
    members: Vec<u64>,
    pseudo_counts: Vec<f64>,
    index: HashMap<u64, usize>,
}

impl ConfigurationSet {
    /// Explicit member list with explicit pseudo-counts.
    pub fn new(n_series: usize, members: Vec<u64>, pseudo_counts: Vec<f64>) -> Result<Self> {
        if n_series == 0 || n_series > 64 {
            return Err(Error::invalid(format!("unsupported series count {n_series}")));
        }
        if members.len() != pseudo_counts.len() {
            return Err(Error::invalid("one pseudo-count per configuration is required"));
        }
        if let Some(d) = pseudo_counts.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid(format!("pseudo-counts must be positive, got {d}")));
        }
        let limit = if n_series == 64 { u64::MAX } else { (1u64 << n_series) - 1 };
        let mut index = HashMap::with_capacity(members.len());
        for (l, &m) in members.iter().enumerate() {
            if m & !limit != 0 {
                return Err(Error::invalid(format!(
                    "configuration {m:#b} has bits beyond {n_series} series"
                )));
            }
            if index.insert(m, l).is_some() {
                return Err(Error::invalid(format!(
                    "duplicate configuration {}",
                    format_config(m, n_series)
                )));
            }
        }
        if !index.contains_key(&0) {
            return Err(Error::invalid(
                "the all-zeros configuration must be admissible",
            ));
        }
        Ok(Self {
            n_series,
            members,
            pseudo_counts,
            index,
        })
    }

    /// Explicit member list, all pseudo-counts 1.
    pub fn with_members(n_series: usize, members: Vec<u64>) -> Result<Self> {
        let d = vec![1.0; members.len()];
        Self::new(n_series, members, d)
    }

    /// The noninformative set `{0,1}^K` in counting order, all pseudo-counts 1.
    pub fn full(n_series: usize) -> Result<Self> {
        if n_series > MAX_FULL_SET_SERIES {
            return Err(Error::Capacity(format!(
                "the full configuration set is limited to {MAX_FULL_SET_SERIES} series, got {n_series}; \
                 supply an explicit configuration list"
            )));
        }
        Self::with_members(n_series, (0..1u64 << n_series).collect())
    }

    /// Parses one binary string of length `K` per line. Blank lines and
    /// lines starting with `#` are skipped. The all-zeros configuration is
    /// added when missing.
    pub fn parse(n_series: usize, text: &str) -> Result<Self> {
        let mut members = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            members.push(parse_config(line, n_series).map_err(|e| {
                Error::invalid(format!("configuration line {}: {e}", lineno + 1))
            })?);
        }
        if !members.contains(&0) {
            members.insert(0, 0);
        }
        Self::with_members(n_series, members)
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    /// Member count `L`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[u64] {
        &self.members
    }

    pub fn pseudo_counts(&self) -> &[f64] {
        &self.pseudo_counts
    }

    pub fn position(&self, config: u64) -> Option<usize> {
        self.index.get(&config).copied()
    }

    pub fn label(&self, l: usize) -> String {
        format_config(self.members[l], self.n_series)
    }

    /// Position of the all-zeros configuration.
    pub fn zero_position(&self) -> usize {
        self.index[&0]
    }
}

/// Text form of a configuration mask, series 1 first.
pub fn format_config(mask: u64, n_series: usize) -> String {
    let mut s = String::with_capacity(n_series);
    for j in 0..n_series {
        let _ = write!(s, "{}", mask >> j & 1);
    }
    s
}

/// Inverse of [`format_config`].
pub fn parse_config(text: &str, n_series: usize) -> Result<u64> {
    if text.len() != n_series {
        return Err(Error::invalid(format!(
            "expected {n_series} binary digits, got {text:?}"
        )));
    }
    text.chars().enumerate().try_fold(0u64, |acc, (j, c)| match c {
        '0' => Ok(acc),
        '1' => Ok(acc | 1 << j),
        other => Err(Error::invalid(format!("unexpected character {other:?}"))),
    })
}

/// Counts how often each configuration appears among the interior columns.
pub fn config_counts(r: &IndicatorMatrix, set: &ConfigurationSet) -> Result<Vec<usize>> {
    if r.n_series() != set.n_series() {
        return Err(Error::Shape(format!(
            "indicator matrix has {} rows, configuration set expects {}",
            r.n_series(),
            set.n_series()
        )));
    }
    let mut counts = vec![0; set.len()];
    for i in 1..r.len() - 1 {
        let col = r.column(i);
        let l = set.position(col).ok_or_else(|| Error::Inadmissible {
            index: i,
            config: format_config(col, set.n_series()),
        })?;
        counts[l] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicator::IndicatorVector;

    fn two_series(cols: &[u64], n: usize) -> IndicatorMatrix {
        let mut m = IndicatorMatrix::empty(2, n).unwrap();
        for (k, &c) in cols.iter().enumerate() {
            m.set_column(k + 1, c).unwrap();
        }
        m
    }

    #[test]
    fn counts_simple() {
        let set = ConfigurationSet::full(2).unwrap();
        let m = two_series(&[0, 0, 0], 5);
        let s = config_counts(&m, &set).unwrap();
        assert_eq!(s, vec![3, 0, 0, 0]);

        let m = two_series(&[0, 0b11, 0], 5);
        let s = config_counts(&m, &set).unwrap();
        assert_eq!(s[set.position(0).unwrap()], 2);
        assert_eq!(s[set.position(0b11).unwrap()], 1);
    }

    #[test]
    fn inadmissible_column() {
        let set = ConfigurationSet::with_members(2, vec![0, 0b11]).unwrap();
        let m = two_series(&[0, 0b01, 0], 5);
        assert!(matches!(
            config_counts(&m, &set),
            Err(Error::Inadmissible { index: 2, .. })
        ));
    }

    #[test]
    fn text_format() {
        assert_eq!(format_config(0b0011, 4), "1100");
        assert_eq!(parse_config("1100", 4).unwrap(), 0b0011);
        assert!(parse_config("110", 4).is_err());
        assert!(parse_config("11x0", 4).is_err());
        let set = ConfigurationSet::parse(3, "# informative\n100\n110\n\n111\n").unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.label(0), "000");
        assert_eq!(set.label(2), "110");
    }

    #[test]
    fn validation() {
        assert!(ConfigurationSet::with_members(2, vec![1, 2]).is_err());
        assert!(ConfigurationSet::with_members(2, vec![0, 1, 1]).is_err());
        assert!(ConfigurationSet::with_members(2, vec![0, 4]).is_err());
        assert!(ConfigurationSet::new(2, vec![0, 1], vec![1.0, 0.0]).is_err());
        assert!(matches!(
            ConfigurationSet::full(13),
            Err(Error::Capacity(_))
        ));
        assert_eq!(ConfigurationSet::full(12).unwrap().len(), 4096);
    }

    proptest::proptest! {
        #[test]
        fn counts_sum_to_interior_length(seed in proptest::collection::vec(0u64..8, 2..30)) {
            let n = seed.len() + 2;
            let mut m = IndicatorMatrix::new(vec![IndicatorVector::empty(n).unwrap(); 3]).unwrap();
            for (k, &c) in seed.iter().enumerate() {
                m.set_column(k + 1, c).unwrap();
            }
            let s = config_counts(&m, &ConfigurationSet::full(3).unwrap()).unwrap();
            proptest::prop_assert_eq!(s.iter().sum::<usize>(), n - 2);
        }
    }
}
