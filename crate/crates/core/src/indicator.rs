//! Change-point indicators and the segment geometry they induce.
//!
//! Indices are 0-based throughout the library: the fixed boundary indicators
//! sit at `0` and `n - 1`, and interior positions are `1..=n - 2`. Reports
//! that leave the crate convert to 1-based time indices.

use std::collections::BTreeSet;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::series::MIN_SERIES_LEN;

/// Binary change-point marks for one series, boundaries pinned to 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndicatorVector {
    bits: Vec<bool>,
}

impl IndicatorVector {
    /// No interior change-points.
    pub fn empty(n: usize) -> Result<Self> {
        if n < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "indicator length {n} is below the minimum of {MIN_SERIES_LEN}"
            )));
        }
        let mut bits = vec![false; n];
        bits[0] = true;
        bits[n - 1] = true;
        Ok(Self { bits })
    }

    /// Builds a vector from interior change-point indices (any order).
    pub fn from_change_points(n: usize, points: &[usize]) -> Result<Self> {
        let mut v = Self::empty(n)?;
        for &p in points {
            if p == 0 || p >= n - 1 {
                return Err(Error::invalid(format!(
                    "change-point {p} is not interior for length {n}"
                )));
            }
            v.bits[p] = true;
        }
        Ok(v)
    }

    /// Accepts a full bit pattern; the boundary bits must be set.
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        let n = bits.len();
        if n < MIN_SERIES_LEN {
            return Err(Error::invalid(format!(
                "indicator length {n} is below the minimum of {MIN_SERIES_LEN}"
            )));
        }
        if !bits[0] || !bits[n - 1] {
            return Err(Error::invalid("boundary indicators must be 1"));
        }
        Ok(Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// Sets an interior indicator. Boundaries cannot be cleared.
    pub fn set(&mut self, i: usize, value: bool) -> Result<()> {
        self.check_interior(i)?;
        self.bits[i] = value;
        Ok(())
    }

    /// Sorted interior change-point indices.
    pub fn change_points(&self) -> Vec<usize> {
        let n = self.len();
        (1..n - 1).filter(|&i| self.bits[i]).collect()
    }

    /// Number of interior change-points `k`.
    pub fn count_change_points(&self) -> usize {
        self.bits[1..self.len() - 1].iter().filter(|&&b| b).count()
    }

    /// Nearest change-points strictly before and after the interior index `i`.
    pub fn locate_neighbors(&self, i: usize) -> Result<(usize, usize)> {
        self.check_interior(i)?;
        let before = (0..i).rev().find(|&k| self.bits[k]).unwrap_or(0);
        let after = (i + 1..self.len()).find(|&k| self.bits[k]).unwrap_or(self.len() - 1);
        Ok((before, after))
    }

    /// The two samples compared when testing `i` as a change-point: the
    /// points after the previous change-point up to `i`, and the points after
    /// `i` up to the next change-point.
    pub fn segments_around<'a>(&self, x: &'a [f64], i: usize) -> Result<(&'a [f64], &'a [f64])> {
        if x.len() != self.len() {
            return Err(Error::Shape(format!(
                "series has {} points, indicators have {}",
                x.len(),
                self.len()
            )));
        }
        let (before, after) = self.locate_neighbors(i)?;
        Ok((&x[before + 1..=i], &x[i + 1..=after]))
    }

    /// Segment decomposition of `0..n`.
    pub fn segmentation(&self) -> Segmentation {
        let boundaries: Vec<usize> = (0..self.len()).filter(|&k| self.bits[k]).collect();
        // The first point closes a one-point segment of its own.
        let mut segments = Vec::with_capacity(boundaries.len());
        let mut start = 0;
        for &b in &boundaries {
            segments.push(start..b + 1);
            start = b + 1;
        }
        Segmentation {
            boundaries,
            segments,
        }
    }

    fn check_interior(&self, i: usize) -> Result<()> {
        if i == 0 || i + 1 >= self.len() {
            return Err(Error::invalid(format!(
                "index {i} is not interior for length {}",
                self.len()
            )));
        }
        Ok(())
    }
}

/// Segments induced by an [`IndicatorVector`]. Each segment ends at a
/// change-point (or the last index); together they partition `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    pub boundaries: Vec<usize>,
    pub segments: Vec<Range<usize>>,
}

impl Segmentation {
    /// The segment that contains `i`.
    pub fn segment_of(&self, i: usize) -> Option<&Range<usize>> {
        self.segments.iter().find(|s| s.contains(&i))
    }
}

/// One [`IndicatorVector`] per series, all of the same length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndicatorMatrix {
    rows: Vec<IndicatorVector>,
}

impl IndicatorMatrix {
    pub fn new(rows: Vec<IndicatorVector>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::invalid("indicator matrix needs at least one row"));
        };
        let n = first.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Shape("indicator rows differ in length".into()));
        }
        Ok(Self { rows })
    }

    pub fn empty(k: usize, n: usize) -> Result<Self> {
        Self::new((0..k).map(|_| IndicatorVector::empty(n)).collect::<Result<_>>()?)
    }

    pub fn n_series(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn rows(&self) -> &[IndicatorVector] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &IndicatorVector {
        &self.rows[j]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut IndicatorVector {
        &mut self.rows[j]
    }

    /// Column `i` as a bit mask: bit `j` is the indicator of series `j`.
    pub fn column(&self, i: usize) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .fold(0u64, |acc, (j, r)| acc | ((r.get(i) as u64) << j))
    }

    /// Writes a column pattern into interior position `i`.
    pub fn set_column(&mut self, i: usize, mask: u64) -> Result<()> {
        for (j, row) in self.rows.iter_mut().enumerate() {
            row.set(i, mask >> j & 1 == 1)?;
        }
        Ok(())
    }
}

/// Indicator state used inside the samplers: the bit vector plus an ordered
/// set of change-points for logarithmic neighbor lookups.
#[derive(Debug, Clone)]
pub(crate) struct ChangeTracker {
    bits: Vec<bool>,
    points: BTreeSet<usize>,
}

impl ChangeTracker {
    pub(crate) fn from_indicator(r: &IndicatorVector) -> Self {
        let bits = r.bits().to_vec();
        let points = (0..bits.len()).filter(|&i| bits[i]).collect();
        Self { bits, points }
    }

    pub(crate) fn len(&self) -> usize {
        self.bits.len()
    }

    pub(crate) fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub(crate) fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i > 0 && i + 1 < self.bits.len());
        if self.bits[i] != value {
            self.bits[i] = value;
            if value {
                self.points.insert(i);
            } else {
                self.points.remove(&i);
            }
        }
    }

    /// Interior change-point count.
    pub(crate) fn count(&self) -> usize {
        self.points.len() - 2
    }

    /// Nearest change-point strictly before `i`.
    pub(crate) fn prev(&self, i: usize) -> usize {
        *self.points.range(..i).next_back().expect("boundary at 0")
    }

    /// Nearest change-point strictly after `i`.
    pub(crate) fn next(&self, i: usize) -> usize {
        *self.points.range(i + 1..).next().expect("boundary at n - 1")
    }

    /// All change-points including both boundaries, ascending.
    pub(crate) fn points(&self) -> impl Iterator<Item = usize> + '_ {
        self.points.iter().copied()
    }

    pub(crate) fn interior_points(&self) -> Vec<usize> {
        let last = self.len() - 1;
        self.points.iter().copied().filter(|&p| p != 0 && p != last).collect()
    }

    pub(crate) fn to_indicator(&self) -> IndicatorVector {
        IndicatorVector {
            bits: self.bits.clone(),
        }
    }
}
