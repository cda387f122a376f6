// SPDX-License-Identifier: MIT OR Apache-2.0

//! Goodness of fit of a grouped refit on one interval.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::grouping::{recognize_groups, refit, GroupingOptions};
use crate::kernel::KernelSpec;
use crate::linalg::Matrix;
use crate::types::{make_grid, DataView, GroupPartition, ScoreTrajectory};
use crate::{Error, Result};

/// Average negative Bradley-Terry log-likelihood of `scores` against the
/// smoothed fractions `ybar`, where `ybar[(i, j)]` is the fraction of
/// `{i, j}` comparisons favouring `j`.
///
/// Ordered pairs whose entry is NaN are skipped and the normalizing count
/// shrinks with them; the diagonal is ignored. With every pair present this
/// is `-(2 / (n(n-1))) Σ_{i≠j} ȳ_ij log(π_j / (π_i + π_j))`.
pub fn neg_log_likelihood(scores: &[f64], ybar: &Matrix) -> f64 {
    let n = scores.len();
    assert!(ybar.rows() == n && ybar.cols() == n, "ybar must be n x n");
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            let y = ybar[(i, j)];
            if i == j || y.is_nan() {
                continue;
            }
            count += 1;
            if y > 0.0 {
                sum += y * (scores[j] / (scores[i] + scores[j])).ln();
            }
        }
    }
    if count == 0 {
        0.0
    } else {
        -2.0 * sum / count as f64
    }
}

/// Grid and solver settings for fitting one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentOptions {
    /// Grid points used for the full horizon; an interval gets its share,
    /// rounded, but never fewer than `min_points`.
    pub grid_points: usize,
    pub min_points: usize,
    pub grouping: GroupingOptions,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            grid_points: 30,
            min_points: 10,
            grouping: GroupingOptions::default(),
        }
    }
}

impl SegmentOptions {
    /// Number of midpoints used on an interval of length `len` within a
    /// horizon `horizon`.
    pub fn points_for(&self, len: f64, horizon: f64) -> usize {
        let share = (self.grid_points as f64 * len / horizon).round() as usize;
        share.max(self.min_points).max(1)
    }
}

/// Grouping and refit on `[start, end)`.
#[derive(Debug, Clone)]
pub struct SegmentFit {
    pub start: f64,
    pub end: f64,
    pub partition: GroupPartition,
    /// Midpoint-rule integral of the negative log-likelihood of the refit
    /// scores over the interval.
    pub cost: f64,
    pub lambda: f64,
    pub item_scores: ScoreTrajectory,
}

impl SegmentFit {
    pub fn group_count(&self) -> usize {
        self.partition.group_count()
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }
}

/// Smallest interval length a segment may have under `spec`.
pub fn min_segment_length(spec: &KernelSpec) -> f64 {
    2.0 * spec.bandwidth()
}

/// Fits groups and refit scores using only comparisons in `[start, end)`
/// (the last interval of the horizon also keeps records at the horizon)
/// and integrates the negative log-likelihood over it.
pub fn segment_cost<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    start: f64,
    end: f64,
    opts: &SegmentOptions,
) -> Result<SegmentFit> {
    let view = data.into();
    let ds = view.dataset();
    if !(start < end) {
        return Err(Error::invalid(alloc::format!("interval [{start}, {end}) is empty")));
    }
    if end - start < min_segment_length(spec) {
        return Err(Error::DegenerateInterval {
            a: start,
            b: end,
            bandwidth: spec.bandwidth(),
        });
    }
    let upper = if end >= ds.horizon() { f64::INFINITY } else { end };
    let window = ds.window(start, upper);
    let m = opts.points_for(end - start, ds.horizon());
    let grid = make_grid(start, end, m)?;
    let fit = recognize_groups(window, spec, &grid, &opts.grouping)?;
    let rf = refit(window, spec, &grid, &fit.partition)?;
    let n = ds.n_items();
    let mut total = 0.0;
    for (k, &t) in grid.points().iter().enumerate() {
        let pm = window.pairwise_mass(spec, t);
        let ybar = Matrix::from_fn(n, n, |i, j| pm.fraction(i, j).unwrap_or(f64::NAN));
        total += neg_log_likelihood(rf.item_scores.at(k), &ybar);
    }
    Ok(SegmentFit {
        start,
        end,
        partition: fit.partition,
        cost: total * grid.spacing(),
        lambda: fit.lambda,
        item_scores: rf.item_scores,
    })
}

/// Interval `[knots[l], knots[r])` of a segment cache.
pub type IntervalIndex = (usize, usize);

/// All intervals `(l, r)` with `l < r` over `count` knots, in the order
/// used by [`SegmentCache`] storage.
pub fn cache_intervals(count: usize) -> Vec<IntervalIndex> {
    let mut out = Vec::with_capacity(count * count.saturating_sub(1) / 2);
    for r in 1..count {
        for l in 0..r {
            out.push((l, r));
        }
    }
    out
}

fn slot(l: usize, r: usize) -> usize {
    r * (r - 1) / 2 + l
}

/// Memoized segment fits for every interval between knots
/// `0 = ξ_0 < ξ_1 < ... < ξ_{U+1} = V`. Intervals shorter than
/// [`min_segment_length`] hold `None` and cost `+∞`.
#[derive(Debug, Clone)]
pub struct SegmentCache {
    knots: Vec<f64>,
    entries: Vec<Option<SegmentFit>>,
}

impl SegmentCache {
    /// Fits every interval in order.
    pub fn compute<'a>(
        data: impl Into<DataView<'a>>,
        spec: &KernelSpec,
        knots: &[f64],
        opts: &SegmentOptions,
    ) -> Result<Self> {
        let view = data.into();
        let entries = cache_intervals(knots.len())
            .into_iter()
            .map(|(l, r)| segment_entry(view, spec, knots[l], knots[r], opts))
            .collect::<Result<Vec<_>>>()?;
        SegmentCache::from_entries(knots.to_vec(), entries)
    }

    /// Wraps fits computed elsewhere; `entries` follows
    /// [`cache_intervals`] order.
    pub fn from_entries(knots: Vec<f64>, entries: Vec<Option<SegmentFit>>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("knots must be strictly increasing with at least two points"));
        }
        let want = knots.len() * (knots.len() - 1) / 2;
        if entries.len() != want {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} segment entries for {} intervals",
                entries.len(),
                want
            )));
        }
        Ok(SegmentCache { knots, entries })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn get(&self, l: usize, r: usize) -> Option<&SegmentFit> {
        assert!(l < r && r < self.knots.len(), "bad interval ({l}, {r})");
        self.entries[slot(l, r)].as_ref()
    }

    /// `L(I) + γ1 |Ĝ(I)| |I| + γ2` for the interval, `+∞` when it is too
    /// short.
    pub fn penalized_cost(&self, l: usize, r: usize, gamma1: f64, gamma2: f64) -> f64 {
        match self.get(l, r) {
            Some(f) => f.cost + gamma1 * f.group_count() as f64 * f.length() + gamma2,
            None => f64::INFINITY,
        }
    }
}

/// [`segment_cost`] with too-short intervals mapped to `None`.
pub fn segment_entry<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    start: f64,
    end: f64,
    opts: &SegmentOptions,
) -> Result<Option<SegmentFit>> {
    match segment_cost(data, spec, start, end, opts) {
        Ok(f) => Ok(Some(f)),
        Err(Error::DegenerateInterval { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}
