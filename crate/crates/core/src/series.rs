//! Observation storage.

use crate::error::{Error, Result};

/// Smallest series length the model accepts: two fixed boundaries plus at
/// least two interior points.
pub const MIN_SERIES_LEN: usize = 4;

/// `K` series of `N` real observations each, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    rows: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl TimeSeriesMatrix {
    /// Builds a matrix from per-series rows. Names default to `s1..sK`.
    pub fn new(rows: Vec<Vec<f64>>, names: Option<Vec<String>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::data("at least one series is required"));
        }
        let n = rows[0].len();
        if n < MIN_SERIES_LEN {
            return Err(Error::data(format!(
                "series length {n} is below the minimum of {MIN_SERIES_LEN}"
            )));
        }
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::data(format!(
                    "series {} has {} points, expected {n}",
                    j + 1,
                    row.len()
                )));
            }
            if let Some(t) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::data(format!(
                    "non-finite value in series {} at time {}",
                    j + 1,
                    t + 1
                )));
            }
        }
        let names = match names {
            Some(names) if names.len() == rows.len() => names,
            Some(names) => {
                return Err(Error::Shape(format!(
                    "{} names for {} series",
                    names.len(),
                    rows.len()
                )))
            }
            None => (1..=rows.len()).map(|j| format!("s{j}")).collect(),
        };
        Ok(Self { rows, names })
    }

    /// Single-series convenience constructor.
    pub fn univariate(values: Vec<f64>) -> Result<Self> {
        Self::new(vec![values], None)
    }

    /// Number of series `K`.
    pub fn n_series(&self) -> usize {
        self.rows.len()
    }

    /// Number of time points `N`.
    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}
