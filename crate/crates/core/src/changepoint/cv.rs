// SPDX-License-Identifier: MIT OR Apache-2.0

//! K-fold selection of the penalties `γ1`, `γ2`.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{detect_from_cache, CandidateSet, ChangePointResult, SegmentCache, SegmentOptions};
use crate::kernel::KernelSpec;
use crate::types::ComparisonDataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions { folds: 10, seed: 0 }
    }
}

/// Held-out performance of one penalty pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvScore {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Mean over folds of the per-comparison held-out log-likelihood.
    pub log_likelihood: f64,
    /// Mean number of change points over folds.
    pub change_points: f64,
}

#[derive(Debug, Clone)]
pub struct CvResult {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Every feasible pair in grid order, `γ1` outermost.
    pub scores: Vec<CvScore>,
}

/// Fold index of every record. The comparisons of each unordered pair are
/// shuffled and dealt round-robin from a random offset, so every fold gets
/// an even share of every pair across the whole horizon.
pub fn fold_assignment(ds: &ComparisonDataset, folds: usize, seed: u64) -> Vec<usize> {
    let n = ds.n_items();
    let mut by_pair: Vec<Vec<usize>> = vec![Vec::new(); n * n];
    for (k, r) in ds.records().iter().enumerate() {
        let (lo, hi) = (r.item_i.min(r.item_j), r.item_i.max(r.item_j));
        if lo != hi && hi < n {
            by_pair[lo * n + hi].push(k);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; ds.records().len()];
    for recs in by_pair.iter_mut().filter(|v| !v.is_empty()) {
        recs.shuffle(&mut rng);
        let offset = rng.random_range(0..folds);
        for (pos, &k) in recs.iter().enumerate() {
            fold[k] = (offset + pos) % folds;
        }
    }
    fold
}

/// Mean Bernoulli log-likelihood of `held` records under the segment-wise
/// refit scores, each read at the grid point nearest the record time.
fn held_out_log_likelihood(ds: &ComparisonDataset, held: &[usize], fit: &ChangePointResult) -> f64 {
    if held.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for &k in held {
        let r = ds.records()[k];
        let seg = fit
            .segments
            .iter()
            .find(|s| r.time < s.end)
            .unwrap_or_else(|| fit.segments.last().expect("segments tile the horizon"));
        let g = seg.item_scores.grid().nearest(r.time);
        let s = seg.item_scores.at(g);
        let (si, sj) = (s[r.item_i], s[r.item_j]);
        let p = if r.outcome == 1 { sj } else { si } / (si + sj);
        total += p.ln();
    }
    total / held.len() as f64
}

/// Cross-validation with a caller-supplied way of filling the segment
/// cache for each training set.
pub fn cross_validate_with(
    ds: &ComparisonDataset,
    candidates: &CandidateSet,
    gamma1_grid: &[f64],
    gamma2_grid: &[f64],
    opts: &CvOptions,
    mut build: impl FnMut(&ComparisonDataset) -> Result<SegmentCache>,
) -> Result<CvResult> {
    if opts.folds < 2 {
        return Err(Error::invalid("cross-validation needs at least two folds"));
    }
    let pairs: Vec<(f64, f64)> = gamma1_grid
        .iter()
        .flat_map(|&g1| gamma2_grid.iter().map(move |&g2| (g1, g2)))
        .filter(|&(g1, g2)| g1 > g2 && g2 >= 0.0)
        .collect();
    if pairs.is_empty() {
        return Err(Error::invalid("no penalty pair with gamma1 > gamma2 >= 0"));
    }
    if candidates.horizon() != ds.horizon() {
        return Err(Error::invalid("candidate horizon differs from data horizon"));
    }
    let fold = fold_assignment(ds, opts.folds, opts.seed);
    let mut ll = vec![0.0; pairs.len()];
    let mut cps = vec![0.0; pairs.len()];
    for f in 0..opts.folds {
        let (held, train): (Vec<usize>, Vec<usize>) = (0..fold.len()).partition(|&k| fold[k] == f);
        let train_ds = ds.subset(train);
        let cache = build(&train_ds)?;
        for (p, &(g1, g2)) in pairs.iter().enumerate() {
            let fit = detect_from_cache(&cache, g1, g2)?;
            ll[p] += held_out_log_likelihood(ds, &held, &fit);
            cps[p] += fit.change_points.len() as f64;
        }
    }
    let k = opts.folds as f64;
    let scores: Vec<CvScore> = pairs
        .iter()
        .enumerate()
        .map(|(p, &(gamma1, gamma2))| CvScore {
            gamma1,
            gamma2,
            log_likelihood: ll[p] / k,
            change_points: cps[p] / k,
        })
        .collect();
    // best likelihood; ties go to fewer change points, then grid order
    let best = scores
        .iter()
        .reduce(|a, b| {
            if b.log_likelihood > a.log_likelihood
                || (b.log_likelihood == a.log_likelihood && b.change_points < a.change_points)
            {
                b
            } else {
                a
            }
        })
        .expect("pairs is nonempty");
    Ok(CvResult {
        gamma1: best.gamma1,
        gamma2: best.gamma2,
        scores,
    })
}

/// Picks `(γ1, γ2)` from the grids, restricted to `γ1 > γ2`, by held-out
/// log-likelihood over comparison folds.
pub fn cross_validate_gammas(
    ds: &ComparisonDataset,
    spec: &KernelSpec,
    candidates: &CandidateSet,
    gamma1_grid: &[f64],
    gamma2_grid: &[f64],
    cv: &CvOptions,
    seg: &SegmentOptions,
) -> Result<CvResult> {
    let knots = candidates.knots();
    cross_validate_with(ds, candidates, gamma1_grid, gamma2_grid, cv, |train| {
        SegmentCache::compute(train, spec, &knots, seg)
    })
}
