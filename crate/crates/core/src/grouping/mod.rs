// SPDX-License-Identifier: MIT OR Apache-2.0

//! Ranking-group recognition with an adaptive group fused lasso on
//! consecutive score gaps, and the group-level refit estimator.

mod design;
mod lasso;
mod refit;
mod transform;

use alloc::vec::Vec;

pub use design::{assemble_design, FusedDesign};
pub use lasso::{
    adaptive_group_lasso, adaptive_group_lasso_from, adaptive_weights, degrees_of_freedom, ebic,
    lambda_grid, lambda_max, lasso_objective, LassoOptions, ThetaPath, MAX_WEIGHT,
};
pub use refit::{group_transition, refit, spread_group_scores, GroupedScores};
pub use transform::{
    q_inverse, q_matrix, scores_from_gaps, scores_from_theta, seriate_items, sort_items, theta_from_scores,
    theta_from_scores_permuted,
};

use crate::kernel::KernelSpec;
use crate::linalg::Matrix;
use crate::spectral::{
    build_transition, stationary_distribution, EstimatorWarning, STATIONARY_MAX_ITER,
    STATIONARY_TOL,
};
use crate::types::{DataView, GroupPartition, ScoreTrajectory, TimeGrid};
use crate::{Error, Result};

/// How items are ordered before consecutive gaps are fused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ItemOrder {
    /// Descending score norm over the grid.
    Norm,
    /// Dendrogram leaf order, see [`seriate_items`].
    #[default]
    Seriation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupingOptions {
    /// Explicit penalty values; when `None` a log-spaced path below
    /// `λ_max` is used.
    pub lambdas: Option<Vec<f64>>,
    pub lambda_count: usize,
    pub lambda_ratio: f64,
    /// EBIC variance offset.
    pub c0: f64,
    /// Support threshold on `‖θ̂_i‖₂ / √m`.
    pub epsilon: f64,
    pub order: ItemOrder,
    pub lasso: LassoOptions,
}

impl Default for GroupingOptions {
    fn default() -> Self {
        GroupingOptions {
            lambdas: None,
            lambda_count: 50,
            lambda_ratio: 1e-4,
            c0: 0.1,
            epsilon: 0.001,
            order: ItemOrder::default(),
            lasso: LassoOptions::default(),
        }
    }
}

/// EBIC of one point on the penalty path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub lambda: f64,
    pub ebic: f64,
    pub groups: usize,
}

#[derive(Debug, Clone)]
pub struct GroupFit {
    pub partition: GroupPartition,
    /// Solution at the selected penalty.
    pub path: ThetaPath,
    pub lambda: f64,
    pub ebic: f64,
    /// Kernel rank centrality estimate used as the pilot.
    pub pilot: ScoreTrajectory,
    /// Item order used to form the gaps.
    pub perm: Vec<usize>,
    pub theta_tilde: Matrix,
    pub lambda_path: Vec<PathPoint>,
    pub warnings: Vec<EstimatorWarning>,
}

impl GroupFit {
    /// Scores implied by the selected gap estimate, in the original item
    /// order. Shrinkage can push small scores below zero; those entries are
    /// clipped to zero and each row is renormalized.
    pub fn fused_trajectory(&self) -> Result<ScoreTrajectory> {
        let grid = self.pilot.grid();
        let n = self.perm.len();
        let mut out = Matrix::zeros(grid.len(), n);
        for k in 0..grid.len() {
            let sorted = scores_from_gaps(&self.path.theta.column(k));
            let row = out.row_mut(k);
            for (c, &item) in self.perm.iter().enumerate() {
                row[item] = sorted[c].max(0.0);
            }
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
        ScoreTrajectory::new(grid.clone(), out)
    }
}

/// Contiguous groups in sorted order: a new group starts after every gap
/// row in `support`.
pub fn partition_from_support(perm: &[usize], support: &[usize]) -> Result<GroupPartition> {
    let n = perm.len();
    let mut boundaries = alloc::vec![0];
    let mut cuts: Vec<usize> = support.iter().map(|&i| i + 1).collect();
    cuts.sort_unstable();
    cuts.dedup();
    boundaries.extend(cuts.into_iter().filter(|&c| c < n));
    boundaries.push(n);
    GroupPartition::new(boundaries, perm.to_vec())
}

/// Estimates the group structure on `grid`.
///
/// Runs kernel rank centrality, orders the items, fits the
/// penalty path with warm starts, keeps the EBIC minimizer and thresholds
/// its gap rows.
pub fn recognize_groups<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    grid: &TimeGrid,
    opts: &GroupingOptions,
) -> Result<GroupFit> {
    let view = data.into();
    let n = view.n_items();
    if n < 2 {
        return Err(Error::invalid("grouping needs at least two items"));
    }
    let mut warnings = Vec::new();
    let mut transitions = Vec::with_capacity(grid.len());
    let mut pilot = Matrix::zeros(grid.len(), n);
    for (k, &t) in grid.points().iter().enumerate() {
        let p = build_transition(view, spec, t);
        if p.unsupported_pairs() > 0 {
            warnings.push(EstimatorWarning::SparsePairs {
                t,
                pairs: p.unsupported_pairs(),
            });
        }
        let st = stationary_distribution(&p, STATIONARY_TOL, STATIONARY_MAX_ITER)?;
        if !st.irreducible {
            warnings.push(EstimatorWarning::Reducible { t });
        }
        pilot.row_mut(k).copy_from_slice(&st.distribution);
        transitions.push(p.entries().clone());
    }
    let pilot = ScoreTrajectory::new(grid.clone(), pilot)?;
    let perm = match opts.order {
        ItemOrder::Norm => sort_items(&pilot),
        ItemOrder::Seriation => seriate_items(&pilot),
    };
    let design = FusedDesign::from_transitions(grid.clone(), &transitions, perm.clone())?;
    let theta_tilde = theta_from_scores_permuted(&pilot, &perm);
    let weights = adaptive_weights(&theta_tilde);

    let lambdas = match &opts.lambdas {
        Some(l) if l.is_empty() => return Err(Error::invalid("empty lambda grid")),
        Some(l) => {
            let mut l = l.clone();
            l.sort_by(|a, b| b.total_cmp(a));
            l
        }
        None => {
            let lm = lambda_max(&design, &weights);
            if lm > 0.0 {
                lambda_grid(lm, opts.lambda_count.max(1), opts.lambda_ratio)
            } else {
                alloc::vec![0.0]
            }
        }
    };

    let mut best: Option<(ThetaPath, f64)> = None;
    let mut lambda_path = Vec::with_capacity(lambdas.len());
    let mut warm: Option<Matrix> = None;
    for &lambda in &lambdas {
        let sol = adaptive_group_lasso_from(&design, &weights, lambda, warm.as_ref(), &opts.lasso)?;
        let score = ebic(&design, &sol, opts.c0);
        lambda_path.push(PathPoint {
            lambda,
            ebic: score,
            groups: sol.thresholded_support(opts.epsilon).len() + 1,
        });
        warm = Some(sol.theta.clone());
        if best.as_ref().map_or(true, |(_, b)| score < *b) {
            best = Some((sol, score));
        }
    }
    let (path, score) = best.expect("lambda grid is nonempty");
    let partition = partition_from_support(&perm, &path.thresholded_support(opts.epsilon))?;
    Ok(GroupFit {
        partition,
        lambda: path.lambda,
        ebic: score,
        path,
        pilot,
        perm,
        theta_tilde,
        lambda_path,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_three_six_of_ten() {
        let perm: Vec<usize> = (0..10).collect();
        let p = partition_from_support(&perm, &[2, 5]).unwrap();
        assert_eq!(p.groups(), [alloc::vec![0, 1, 2], alloc::vec![3, 4, 5], alloc::vec![6, 7, 8, 9]]);
    }

    #[test]
    fn empty_support_is_one_group() {
        let p = partition_from_support(&[2, 0, 1], &[]).unwrap();
        assert_eq!(p.group_count(), 1);
    }
}
