//! Rank-sum p-values for splits of contiguous windows of one series.
//!
//! The samplers ask the same question millions of times: given change-points
//! `lo < i < hi`, what is the p-value of the rank-sum test between
//! `x[lo+1..=i]` and `x[i+1..=hi]`? For moderate lengths we precompute, for
//! every window `[s, e)`, the number of inverted pairs, tied pairs and tied
//! triples. The cross-sample counts of any split then follow by inclusion and
//! exclusion, so each query costs O(1). Long series fall back to sorting the
//! two segments.

use crate::ranktest::{self, EXACT_MAX_SIZE};

/// Series longer than this use the sorting fallback; the tables need
/// `N (N + 1) / 2` entries each.
pub const TABLE_MAX_LEN: usize = 4096;

#[derive(Debug, Clone)]
struct WindowTables {
    n: usize,
    /// pairs `s <= a < b < e` with `x[a] > x[b]`
    inversions: Vec<u32>,
    /// pairs with `x[a] == x[b]`; absent when the series has no ties
    tied_pairs: Option<Vec<u32>>,
    /// triples of equal values; absent when the series has no ties
    tied_triples: Option<Vec<u64>>,
}

impl WindowTables {
    fn build(x: &[f64]) -> Self {
        let n = x.len();
        let size = (n + 1) * (n + 2) / 2;
        let has_ties = {
            let mut sorted = x.to_vec();
            sorted.sort_by(f64::total_cmp);
            sorted.windows(2).any(|w| w[0] == w[1])
        };
        let mut inversions = vec![0u32; size];
        let mut tied_pairs = has_ties.then(|| vec![0u32; size]);
        let mut tied_triples = has_ties.then(|| vec![0u64; size]);
        for e in 1..=n {
            let newest = x[e - 1];
            let mut greater = 0u32;
            let mut equal = 0u32;
            // window [e-1, e) holds one point and no pairs
            for s in (0..e - 1).rev() {
                if x[s] > newest {
                    greater += 1;
                } else if x[s] == newest {
                    equal += 1;
                }
                let here = idx(s, e);
                let prev = idx(s, e - 1);
                inversions[here] = inversions[prev] + greater;
                if let (Some(p), Some(t)) = (tied_pairs.as_mut(), tied_triples.as_mut()) {
                    p[here] = p[prev] + equal;
                    let eq = u64::from(equal);
                    t[here] = t[prev] + eq * eq.saturating_sub(1) / 2;
                }
            }
        }
        Self {
            n,
            inversions,
            tied_pairs,
            tied_triples,
        }
    }

    fn pairs(&self, s: usize, e: usize) -> u32 {
        self.tied_pairs.as_ref().map_or(0, |p| p[idx(s, e)])
    }
}

#[inline]
fn idx(s: usize, e: usize) -> usize {
    debug_assert!(s <= e);
    e * (e + 1) / 2 + s
}

/// Answers split p-value queries for one series.
#[derive(Debug, Clone)]
pub struct SplitTester {
    values: Vec<f64>,
    tables: Option<WindowTables>,
}

impl SplitTester {
    /// Chooses the table engine when the series is short enough.
    pub fn new(x: &[f64]) -> Self {
        if x.len() <= TABLE_MAX_LEN {
            Self::with_tables(x)
        } else {
            Self::direct(x)
        }
    }

    pub fn with_tables(x: &[f64]) -> Self {
        Self {
            values: x.to_vec(),
            tables: Some(WindowTables::build(x)),
        }
    }

    pub fn direct(x: &[f64]) -> Self {
        Self {
            values: x.to_vec(),
            tables: None,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Two-sided p-value for a change at `i` with neighbouring change-points
    /// `lo < i < hi`.
    pub fn pvalue(&self, lo: usize, i: usize, hi: usize) -> f64 {
        debug_assert!(lo < i && i < hi && hi < self.values.len());
        match &self.tables {
            Some(t) => table_pvalue(t, lo + 1, i + 1, hi + 1),
            None => {
                ranktest::wilcoxon_pvalue(&self.values[lo + 1..=i], &self.values[i + 1..=hi])
                    .expect("both segments are non-empty")
                    .p
            }
        }
    }
}

/// `Y = [a, m)`, `Z = [m, b)`.
fn table_pvalue(t: &WindowTables, a: usize, m: usize, b: usize) -> f64 {
    debug_assert!(b <= t.n);
    let n_y = m - a;
    let n_z = b - m;
    let inv = |s, e| f64::from(t.inversions[idx(s, e)]);
    let greater = inv(a, b) - inv(a, m) - inv(m, b);
    let window_ties = t.pairs(a, b);
    let equal = f64::from(window_ties) - f64::from(t.pairs(a, m)) - f64::from(t.pairs(m, b));
    // Mann-Whitney count of (y, z) pairs with y > z, ties counted half.
    let u_mw = greater + 0.5 * equal;
    let nn = (n_y * n_z) as f64;
    let u = u_mw.min(nn - u_mw);
    if window_ties == 0 && n_y <= EXACT_MAX_SIZE && n_z <= EXACT_MAX_SIZE {
        ranktest::exact_pvalue(u, n_y, n_z)
    } else {
        // sum over tie groups of t^3 - t = 6 (triples + pairs)
        let triples = t.tied_triples.as_ref().map_or(0, |v| v[idx(a, b)]);
        let tie_sum = 6.0 * (triples as f64 + f64::from(window_ties));
        ranktest::normal_pvalue_tie_sum(u, n_y, n_z, tie_sum)
    }
}
