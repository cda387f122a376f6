// SPDX-License-Identifier: MIT OR Apache-2.0

//! Shared domain types: comparison records, the time grid, score
//! trajectories and group partitions.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::kernel::KernelSpec;
use crate::linalg::Matrix;
use crate::{Error, Result};

/// One comparison between two items.
///
/// `outcome = 1` favours `item_j`, `outcome = 0` favours `item_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRecord {
    pub item_i: usize,
    pub item_j: usize,
    pub time: f64,
    pub outcome: u8,
}

impl ComparisonRecord {
    pub fn new(item_i: usize, item_j: usize, time: f64, outcome: u8) -> Self {
        ComparisonRecord {
            item_i,
            item_j,
            time,
            outcome,
        }
    }
}

/// Comparisons of one unordered pair `(lo, hi)`, sorted by time.
///
/// `hi_won[k]` is 1 when comparison `k` favoured the higher-indexed item.
#[derive(Debug, Clone, Default)]
struct PairSeries {
    times: Vec<f64>,
    hi_won: Vec<f64>,
}

/// Kernel mass of one unordered pair at one time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairMass {
    /// `Σ K_h(t, t_k)`
    pub mass: f64,
    /// `Σ K_h(t, t_k)` over comparisons won by the higher-indexed item.
    pub hi_won: f64,
}

#[derive(Debug, Clone)]
pub struct ComparisonDataset {
    records: Vec<ComparisonRecord>,
    n_items: usize,
    horizon: f64,
    labels: Option<Vec<String>>,
    pairs: Vec<PairSeries>,
}

impl ComparisonDataset {
    /// Builds a dataset. Records that break an invariant are kept (so that
    /// [`validate_dataset`] can report them) but never enter any estimate.
    pub fn new(
        records: Vec<ComparisonRecord>,
        n_items: usize,
        horizon: f64,
        labels: Option<Vec<String>>,
    ) -> Self {
        let mut pairs = vec![PairSeries::default(); n_items * n_items.saturating_sub(1) / 2];
        for r in &records {
            if !record_is_usable(r, n_items) {
                continue;
            }
            let (lo, hi) = if r.item_i < r.item_j {
                (r.item_i, r.item_j)
            } else {
                (r.item_j, r.item_i)
            };
            // outcome 1 favours item_j
            let j_won = r.outcome == 1;
            let hi_won = if r.item_j == hi { j_won } else { !j_won };
            let series = &mut pairs[pair_slot(n_items, lo, hi)];
            series.times.push(r.time);
            series.hi_won.push(if hi_won { 1.0 } else { 0.0 });
        }
        for series in &mut pairs {
            let mut order: Vec<usize> = (0..series.times.len()).collect();
            order.sort_by(|&a, &b| series.times[a].total_cmp(&series.times[b]));
            series.times = order.iter().map(|&k| series.times[k]).collect();
            series.hi_won = order.iter().map(|&k| series.hi_won[k]).collect();
        }
        ComparisonDataset {
            records,
            n_items,
            horizon,
            labels,
            pairs,
        }
    }

    pub fn records(&self) -> &[ComparisonRecord] {
        &self.records
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Display label of an item, falling back to its index.
    pub fn label(&self, item: usize) -> String {
        match &self.labels {
            Some(l) => l[item].clone(),
            None => alloc::format!("{item}"),
        }
    }

    /// Number of comparisons recorded for the unordered pair `{i, j}`.
    pub fn pair_count(&self, i: usize, j: usize) -> usize {
        if i == j {
            return 0;
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.pairs[pair_slot(self.n_items, lo, hi)].times.len()
    }

    /// Mean number of comparisons per unordered pair and unit time.
    pub fn comparisons_per_pair(&self) -> f64 {
        let pairs = self.pairs.len().max(1) as f64;
        let total: usize = self.pairs.iter().map(|p| p.times.len()).sum();
        total as f64 / pairs / self.horizon
    }

    /// A copy holding only the records at the given positions.
    pub fn subset(&self, keep: impl IntoIterator<Item = usize>) -> ComparisonDataset {
        let records = keep.into_iter().map(|k| self.records[k]).collect();
        ComparisonDataset::new(records, self.n_items, self.horizon, self.labels.clone())
    }

    /// A copy with items renamed through `relabel[old] = new`.
    pub fn relabeled(&self, relabel: &[usize]) -> ComparisonDataset {
        let records = self
            .records
            .iter()
            .map(|r| ComparisonRecord {
                item_i: relabel[r.item_i],
                item_j: relabel[r.item_j],
                ..*r
            })
            .collect();
        let labels = self.labels.as_ref().map(|l| {
            let mut out = vec![String::new(); l.len()];
            for (old, name) in l.iter().enumerate() {
                out[relabel[old]] = name.clone();
            }
            out
        });
        ComparisonDataset::new(records, self.n_items, self.horizon, labels)
    }

    pub fn view(&self) -> DataView<'_> {
        DataView {
            data: self,
            start: f64::NEG_INFINITY,
            end: f64::INFINITY,
        }
    }

    /// Restricts the data to comparisons with time in `[start, end)`.
    pub fn window(&self, start: f64, end: f64) -> DataView<'_> {
        DataView {
            data: self,
            start,
            end,
        }
    }
}

fn record_is_usable(r: &ComparisonRecord, n: usize) -> bool {
    r.item_i != r.item_j && r.item_i < n && r.item_j < n && r.outcome <= 1 && r.time.is_finite()
}

#[inline]
fn pair_slot(n: usize, lo: usize, hi: usize) -> usize {
    lo * (2 * n - lo - 1) / 2 + (hi - lo - 1)
}

/// A dataset seen through a time window `[start, end)`.
#[derive(Debug, Clone, Copy)]
pub struct DataView<'a> {
    data: &'a ComparisonDataset,
    start: f64,
    end: f64,
}

impl<'a> From<&'a ComparisonDataset> for DataView<'a> {
    fn from(ds: &'a ComparisonDataset) -> Self {
        ds.view()
    }
}

impl<'a> DataView<'a> {
    pub fn dataset(&self) -> &'a ComparisonDataset {
        self.data
    }

    pub fn n_items(&self) -> usize {
        self.data.n_items
    }

    /// Time window `[start, end)`; unbounded sides are infinite.
    pub fn bounds(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    /// Kernel mass of the unordered pair `{lo, hi}` (`lo < hi`) at time `t`.
    pub fn pair_mass(&self, kernel: &KernelSpec, lo: usize, hi: usize, t: f64) -> PairMass {
        debug_assert!(lo < hi);
        let series = &self.data.pairs[pair_slot(self.data.n_items, lo, hi)];
        let (mut from, mut to) = (self.start, self.end);
        if let Some(r) = kernel.support_radius() {
            from = from.max(t - r);
            to = to.min(t + r);
        }
        let times = &series.times;
        let first = times.partition_point(|&s| s < from);
        let last = times.partition_point(|&s| s < to);
        let mut out = PairMass::default();
        for k in first..last {
            let w = kernel.weight(t, times[k]);
            out.mass += w;
            out.hi_won += w * series.hi_won[k];
        }
        out
    }

    /// Kernel masses of every unordered pair at time `t`.
    pub fn pairwise_mass(&self, kernel: &KernelSpec, t: f64) -> PairwiseMass {
        let n = self.data.n_items;
        let mut mass = Matrix::zeros(n, n);
        let mut toward = Matrix::zeros(n, n);
        for lo in 0..n {
            for hi in lo + 1..n {
                let pm = self.pair_mass(kernel, lo, hi, t);
                mass[(lo, hi)] = pm.mass;
                mass[(hi, lo)] = pm.mass;
                toward[(lo, hi)] = pm.hi_won;
                toward[(hi, lo)] = pm.mass - pm.hi_won;
            }
        }
        PairwiseMass { mass, toward }
    }

    /// Records whose time falls in the window.
    pub fn records(&self) -> impl Iterator<Item = &'a ComparisonRecord> + 'a {
        let (start, end) = (self.start, self.end);
        self.data
            .records
            .iter()
            .filter(move |r| r.time >= start && r.time < end)
    }
}

/// Kernel-weighted pair statistics at one time.
///
/// `mass[(i, j)]` is the total kernel weight of comparisons between `i` and
/// `j`; `toward[(i, j)]` is the part of it favouring `j`. Both are zero on
/// the diagonal and `toward[(i, j)] + toward[(j, i)] = mass[(i, j)]`.
#[derive(Debug, Clone)]
pub struct PairwiseMass {
    pub mass: Matrix,
    pub toward: Matrix,
}

impl PairwiseMass {
    /// Kernel-smoothed fraction of `{i, j}` comparisons favouring `j`.
    pub fn fraction(&self, i: usize, j: usize) -> Option<f64> {
        let m = self.mass[(i, j)];
        (m > 0.0).then(|| self.toward[(i, j)] / m)
    }
}

/// A broken dataset invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    SelfComparison { record: usize },
    ItemOutOfRange { record: usize, item: usize },
    TimeOutOfRange { record: usize, time: f64 },
    BadOutcome { record: usize, outcome: u8 },
    BadHorizon { horizon: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::SelfComparison { record } => {
                write!(f, "item_i == item_j at record {record}")
            }
            Violation::ItemOutOfRange { record, item } => {
                write!(f, "item {item} out of range at record {record}")
            }
            Violation::TimeOutOfRange { record, time } => {
                write!(f, "time out of range ({time}) at record {record}")
            }
            Violation::BadOutcome { record, outcome } => {
                write!(f, "outcome {outcome} is not 0 or 1 at record {record}")
            }
            Violation::BadHorizon { horizon } => write!(f, "horizon {horizon} is not positive"),
        }
    }
}

/// Lists every broken invariant; an empty list means the dataset is valid.
pub fn validate_dataset(ds: &ComparisonDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(ds.horizon > 0.0 && ds.horizon.is_finite()) {
        out.push(Violation::BadHorizon {
            horizon: ds.horizon,
        });
    }
    for (k, r) in ds.records.iter().enumerate() {
        if r.item_i == r.item_j {
            out.push(Violation::SelfComparison { record: k });
        }
        for item in [r.item_i, r.item_j] {
            if item >= ds.n_items {
                out.push(Violation::ItemOutOfRange { record: k, item });
            }
        }
        if !(r.time >= 0.0 && r.time <= ds.horizon) {
            out.push(Violation::TimeOutOfRange {
                record: k,
                time: r.time,
            });
        }
        if r.outcome > 1 {
            out.push(Violation::BadOutcome {
                record: k,
                outcome: r.outcome,
            });
        }
    }
    out
}

/// Equidistant midpoints `t_k = a + (k - 1/2)(b - a)/m`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    points: Vec<f64>,
    start: f64,
    end: f64,
}

pub fn make_grid(a: f64, b: f64, m: usize) -> Result<TimeGrid> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::invalid(alloc::format!(
            "grid interval [{a}, {b}] is degenerate"
        )));
    }
    if m == 0 {
        return Err(Error::invalid("grid needs at least one point"));
    }
    let step = (b - a) / m as f64;
    let points = (0..m).map(|k| a + (k as f64 + 0.5) * step).collect();
    Ok(TimeGrid {
        points,
        start: a,
        end: b,
    })
}

impl TimeGrid {
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    pub fn spacing(&self) -> f64 {
        (self.end - self.start) / self.points.len() as f64
    }

    /// Index of the grid point closest to `t`.
    pub fn nearest(&self, t: f64) -> usize {
        let k = ((t - self.start) / self.spacing()).floor();
        (k.max(0.0) as usize).min(self.points.len() - 1)
    }
}

/// Ability estimates on a time grid: row `k` is the score vector at `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrajectory {
    grid: TimeGrid,
    scores: Matrix,
}

/// Row-sum tolerance of a [`ScoreTrajectory`].
pub const SIMPLEX_TOL: f64 = 1e-10;

impl ScoreTrajectory {
    /// Rows must be nonnegative and sum to one within [`SIMPLEX_TOL`].
    ///
    /// Zero entries are allowed: a reducible comparison graph can leave an
    /// item with no stationary mass.
    pub fn new(grid: TimeGrid, scores: Matrix) -> Result<Self> {
        if scores.rows() != grid.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} score rows for a {}-point grid",
                scores.rows(),
                grid.len()
            )));
        }
        for k in 0..scores.rows() {
            let row = scores.row(k);
            if row.iter().any(|&v| !(v >= 0.0)) {
                return Err(Error::invalid(alloc::format!(
                    "negative or non-finite score at grid point {k}"
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > SIMPLEX_TOL {
                return Err(Error::invalid(alloc::format!(
                    "scores at grid point {k} sum to {s}"
                )));
            }
        }
        Ok(ScoreTrajectory { grid, scores })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn scores(&self) -> &Matrix {
        &self.scores
    }

    pub fn n_items(&self) -> usize {
        self.scores.cols()
    }

    pub fn at(&self, k: usize) -> &[f64] {
        self.scores.row(k)
    }

    pub fn item(&self, i: usize) -> Vec<f64> {
        self.scores.column(i)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.scores.as_slice().iter().all(|&v| v > 0.0)
    }
}

/// Ordered partition of items into groups that are contiguous in the
/// score-sorted order.
///
/// `perm[p]` is the original item at sorted position `p`; group `k` holds
/// the positions `boundaries[k]..boundaries[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    boundaries: Vec<usize>,
    perm: Vec<usize>,
}

impl GroupPartition {
    pub fn new(boundaries: Vec<usize>, perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        if boundaries.first() != Some(&0) || boundaries.last() != Some(&n) {
            return Err(Error::invalid("partition boundaries must run from 0 to n"));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("partition boundaries must be strictly ascending"));
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || core::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("perm is not a permutation"));
            }
        }
        Ok(GroupPartition { boundaries, perm })
    }

    /// One group holding every item.
    pub fn single(n: usize) -> Self {
        GroupPartition {
            boundaries: vec![0, n],
            perm: (0..n).collect(),
        }
    }

    /// Builds a partition from explicit groups listed best first.
    pub fn from_groups(groups: &[Vec<usize>]) -> Result<Self> {
        let mut boundaries = vec![0];
        let mut perm = Vec::new();
        for g in groups {
            if g.is_empty() {
                return Err(Error::invalid("empty group"));
            }
            perm.extend_from_slice(g);
            boundaries.push(perm.len());
        }
        GroupPartition::new(boundaries, perm)
    }

    pub fn n_items(&self) -> usize {
        self.perm.len()
    }

    pub fn group_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Original item ids of group `k`.
    pub fn group(&self, k: usize) -> &[usize] {
        &self.perm[self.boundaries[k]..self.boundaries[k + 1]]
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        (0..self.group_count()).map(|k| self.group(k).to_vec()).collect()
    }

    pub fn group_sizes(&self) -> Vec<usize> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Group index of every item.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.perm.len()];
        for k in 0..self.group_count() {
            for &i in self.group(k) {
                out[i] = k;
            }
        }
        out
    }

    /// Whether two partitions group the items identically, ignoring group
    /// order.
    pub fn same_grouping(&self, other: &GroupPartition) -> bool {
        if self.n_items() != other.n_items() || self.group_count() != other.group_count() {
            return false;
        }
        let (a, b) = (self.labels(), other.labels());
        let mut map = vec![usize::MAX; self.group_count()];
        for (&x, &y) in a.iter().zip(&b) {
            if map[x] == usize::MAX {
                map[x] = y;
            } else if map[x] != y {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_single_midpoint() {
        let g = make_grid(0.0, 1.0, 1).unwrap();
        assert_eq!(g.points(), &[0.5]);
    }

    #[test]
    fn grid_four_midpoints() {
        let g = make_grid(0.0, 1.0, 4).unwrap();
        assert_eq!(g.points(), &[0.125, 0.375, 0.625, 0.875]);
    }

    #[test]
    fn grid_thirty_points() {
        let g = make_grid(0.0, 1.0, 30).unwrap();
        assert_eq!(g.len(), 30);
        for w in g.points().windows(2) {
            assert!((w[1] - w[0] - 1.0 / 30.0).abs() < 1e-12);
        }
        assert!((g.spacing() * 30.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        assert!(matches!(make_grid(1.0, 1.0, 3), Err(Error::InvalidArgument(_))));
        assert!(make_grid(2.0, 1.0, 3).is_err());
        assert!(make_grid(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn self_comparison_is_reported() {
        let ds = ComparisonDataset::new(vec![ComparisonRecord::new(3, 3, 0.5, 1)], 5, 1.0, None);
        let v = validate_dataset(&ds);
        assert_eq!(v.len(), 1);
        assert_eq!(alloc::format!("{}", v[0]), "item_i == item_j at record 0");
    }

    #[test]
    fn empty_dataset_is_valid() {
        let ds = ComparisonDataset::new(Vec::new(), 4, 1.0, None);
        assert!(validate_dataset(&ds).is_empty());
    }

    #[test]
    fn negative_time_is_reported() {
        let ds = ComparisonDataset::new(vec![ComparisonRecord::new(0, 1, -0.1, 0)], 2, 1.0, None);
        let v = validate_dataset(&ds);
        assert_eq!(v, vec![Violation::TimeOutOfRange { record: 0, time: -0.1 }]);
        assert!(alloc::format!("{}", v[0]).contains("time out of range"));
    }

    #[test]
    fn validation_is_idempotent() {
        let ds = ComparisonDataset::new(
            vec![
                ComparisonRecord::new(0, 0, 0.1, 1),
                ComparisonRecord::new(0, 7, 2.0, 3),
            ],
            3,
            1.0,
            None,
        );
        assert_eq!(validate_dataset(&ds), validate_dataset(&ds));
        assert_eq!(validate_dataset(&ds).len(), 4);
    }

    #[test]
    fn partition_groups_follow_boundaries() {
        let p = GroupPartition::new(vec![0, 3, 6, 10], (0..10).collect()).unwrap();
        assert_eq!(p.group_count(), 3);
        assert_eq!(p.group(0), &[0, 1, 2]);
        assert_eq!(p.group(1), &[3, 4, 5]);
        assert_eq!(p.group(2), &[6, 7, 8, 9]);
    }

    #[test]
    fn bad_partitions_are_rejected() {
        assert!(GroupPartition::new(vec![0, 2, 2, 3], vec![0, 1, 2]).is_err());
        assert!(GroupPartition::new(vec![1, 3], vec![0, 1, 2]).is_err());
        assert!(GroupPartition::new(vec![0, 3], vec![0, 1, 1]).is_err());
    }

    #[test]
    fn same_grouping_ignores_order() {
        let a = GroupPartition::from_groups(&[vec![0, 1], vec![2, 3]]).unwrap();
        let b = GroupPartition::from_groups(&[vec![3, 2], vec![1, 0]]).unwrap();
        let c = GroupPartition::from_groups(&[vec![0, 2], vec![1, 3]]).unwrap();
        assert!(a.same_grouping(&b));
        assert!(!a.same_grouping(&c));
    }

    #[test]
    fn records_inform_both_directions() {
        let ds = ComparisonDataset::new(
            vec![
                ComparisonRecord::new(0, 1, 0.5, 1),
                ComparisonRecord::new(1, 0, 0.5, 1),
                ComparisonRecord::new(1, 0, 0.5, 1),
            ],
            2,
            1.0,
            None,
        );
        let k = KernelSpec::epanechnikov(0.1).unwrap();
        let pm = ds.view().pairwise_mass(&k, 0.5);
        // one comparison favours 1, two favour 0
        assert!((pm.fraction(0, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((pm.fraction(1, 0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }
}
