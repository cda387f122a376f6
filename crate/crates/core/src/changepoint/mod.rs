// SPDX-License-Identifier: MIT OR Apache-2.0

//! Detection of times at which the ranking-group structure changes.
//!
//! Each interval between candidate points is fitted by grouping and
//! refit; a dynamic program then picks the breakpoints minimizing
//! `Σ L(I) + γ1 Σ |Ĝ(I)| |I| + γ2 |P|`.

mod cv;
mod segment;

use alloc::vec;
use alloc::vec::Vec;

pub use cv::{cross_validate_gammas, cross_validate_with, fold_assignment, CvOptions, CvResult, CvScore};
pub use segment::{
    cache_intervals, min_segment_length, neg_log_likelihood, segment_cost, segment_entry, IntervalIndex,
    SegmentCache, SegmentFit, SegmentOptions,
};

use crate::kernel::KernelSpec;
use crate::types::DataView;
use crate::{Error, Result};

/// Candidate change points `ξ_1 < ... < ξ_U`, all inside `(0, V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    xi: Vec<f64>,
    horizon: f64,
}

impl CandidateSet {
    pub fn new(xi: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid(alloc::format!("horizon {horizon} must be positive")));
        }
        if xi.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("candidates must be strictly increasing"));
        }
        if let Some(&bad) = xi.iter().find(|&&x| !(x > 0.0 && x < horizon)) {
            return Err(Error::invalid(alloc::format!(
                "candidate {bad} is not inside (0, {horizon})"
            )));
        }
        Ok(CandidateSet { xi, horizon })
    }

    /// `U` equally spaced points `kV / (U + 1)`.
    pub fn uniform(count: usize, horizon: f64) -> Result<Self> {
        let step = horizon / (count + 1) as f64;
        CandidateSet::new((1..=count).map(|k| k as f64 * step).collect(), horizon)
    }

    pub fn points(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// `0, ξ_1, ..., ξ_U, V`.
    pub fn knots(&self) -> Vec<f64> {
        let mut k = Vec::with_capacity(self.xi.len() + 2);
        k.push(0.0);
        k.extend_from_slice(&self.xi);
        k.push(self.horizon);
        k
    }
}

#[derive(Debug, Clone)]
pub struct ChangePointResult {
    /// Interior breakpoints, ascending.
    pub change_points: Vec<f64>,
    pub segments: Vec<SegmentFit>,
    pub objective: f64,
    pub gammas: (f64, f64),
}

/// Penalized objective of the segmentation whose breakpoints are the knot
/// indices `cuts` (strictly increasing, interior).
pub fn segmentation_objective(cache: &SegmentCache, cuts: &[usize], gamma1: f64, gamma2: f64) -> f64 {
    let last = cache.knots().len() - 1;
    let mut prev = 0;
    let mut total = 0.0;
    for &c in cuts.iter().chain(core::iter::once(&last)) {
        total += cache.penalized_cost(prev, c, gamma1, gamma2);
        prev = c;
    }
    total
}

/// Forward dynamic program over right endpoints with a backtrace array.
/// Returns the interior knot indices of the optimum and its objective;
/// ties go to the smallest left endpoint.
pub fn dp_segment(cache: &SegmentCache, gamma1: f64, gamma2: f64) -> (Vec<usize>, f64) {
    let count = cache.knots().len();
    let mut best = vec![f64::INFINITY; count];
    let mut back = vec![usize::MAX; count];
    best[0] = 0.0;
    for r in 1..count {
        for l in 0..r {
            let b = best[l] + cache.penalized_cost(l, r, gamma1, gamma2);
            if b < best[r] {
                best[r] = b;
                back[r] = l;
            }
        }
    }
    let mut cuts = Vec::new();
    let mut k = count - 1;
    while k > 0 && back[k] != usize::MAX {
        k = back[k];
        if k > 0 {
            cuts.push(k);
        }
    }
    cuts.reverse();
    (cuts, best[count - 1])
}

/// Runs the dynamic program on precomputed segment fits.
pub fn detect_from_cache(cache: &SegmentCache, gamma1: f64, gamma2: f64) -> Result<ChangePointResult> {
    if !(gamma1 >= 0.0 && gamma2 >= 0.0) {
        return Err(Error::invalid("penalties must be nonnegative"));
    }
    let (cuts, objective) = dp_segment(cache, gamma1, gamma2);
    let knots = cache.knots();
    if !objective.is_finite() {
        return Err(Error::DegenerateInterval {
            a: knots[0],
            b: knots[knots.len() - 1],
            bandwidth: f64::NAN,
        });
    }
    let mut segments = Vec::with_capacity(cuts.len() + 1);
    let mut prev = 0;
    for &c in cuts.iter().chain(core::iter::once(&(knots.len() - 1))) {
        segments.push(cache.get(prev, c).expect("finite optimum uses fitted intervals").clone());
        prev = c;
    }
    Ok(ChangePointResult {
        change_points: cuts.iter().map(|&c| knots[c]).collect(),
        segments,
        objective,
        gammas: (gamma1, gamma2),
    })
}

/// Fits every candidate interval, then minimizes the penalized objective.
pub fn dp_detect<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    candidates: &CandidateSet,
    gamma1: f64,
    gamma2: f64,
    opts: &SegmentOptions,
) -> Result<ChangePointResult> {
    let view = data.into();
    check_horizon(view, candidates)?;
    let cache = SegmentCache::compute(view, spec, &candidates.knots(), opts)?;
    detect_from_cache(&cache, gamma1, gamma2)
}

fn check_horizon(view: DataView<'_>, candidates: &CandidateSet) -> Result<()> {
    if candidates.horizon() != view.dataset().horizon() {
        return Err(Error::invalid(alloc::format!(
            "candidate horizon {} differs from data horizon {}",
            candidates.horizon(),
            view.dataset().horizon()
        )));
    }
    Ok(())
}

/// Comparison method: groups each interval between consecutive knots on
/// its own and reports every candidate where the neighbouring groupings
/// differ.
pub fn naive_from_cache(cache: &SegmentCache) -> Result<Vec<f64>> {
    let knots = cache.knots();
    let fits = (1..knots.len())
        .map(|r| {
            cache.get(r - 1, r).ok_or(Error::DegenerateInterval {
                a: knots[r - 1],
                b: knots[r],
                bandwidth: f64::NAN,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(fits
        .windows(2)
        .enumerate()
        .filter(|(_, w)| !w[0].partition.same_grouping(&w[1].partition))
        .map(|(k, _)| knots[k + 1])
        .collect())
}

/// [`naive_from_cache`] fitting only the consecutive intervals.
pub fn naive_detect<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    candidates: &CandidateSet,
    opts: &SegmentOptions,
) -> Result<Vec<f64>> {
    let view = data.into();
    check_horizon(view, candidates)?;
    let knots = candidates.knots();
    let mut changes = Vec::new();
    let mut prev: Option<SegmentFit> = None;
    for r in 1..knots.len() {
        let fit = segment_cost(view, spec, knots[r - 1], knots[r], opts)?;
        if let Some(p) = &prev {
            if !p.partition.same_grouping(&fit.partition) {
                changes.push(knots[r - 1]);
            }
        }
        prev = Some(fit);
    }
    Ok(changes)
}
