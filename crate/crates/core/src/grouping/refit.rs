// SPDX-License-Identifier: MIT OR Apache-2.0

//! Group-level refit: pool comparisons between groups, rank the groups,
//! then spread the group scores back over the items.

use alloc::vec::Vec;

use crate::kernel::KernelSpec;
use crate::linalg::Matrix;
use crate::spectral::{stationary_distribution, TransitionMatrix, STATIONARY_MAX_ITER, STATIONARY_TOL};
use crate::types::{DataView, GroupPartition, ScoreTrajectory, TimeGrid};
use crate::Result;

#[derive(Debug, Clone)]
pub struct GroupedScores {
    pub partition: GroupPartition,
    /// `m x B`; row `k` is the group-level distribution at `t_k`.
    pub group_scores: Matrix,
    pub item_scores: ScoreTrajectory,
}

/// Group-level transition matrix at `t`: off-diagonal entries are the
/// pooled kernel-weighted fraction of `G_l` vs `G_k` comparisons favouring
/// `G_k`, divided by `B`.
pub fn group_transition<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    partition: &GroupPartition,
    t: f64,
) -> TransitionMatrix {
    let view = data.into();
    let pm = view.pairwise_mass(spec, t);
    let labels = partition.labels();
    let b = partition.group_count();
    let mut mass = Matrix::zeros(b, b);
    let mut toward = Matrix::zeros(b, b);
    let n = labels.len();
    for i in 0..n {
        for j in 0..n {
            let (gi, gj) = (labels[i], labels[j]);
            if gi != gj {
                mass[(gi, gj)] += pm.mass[(i, j)];
                toward[(gi, gj)] += pm.toward[(i, j)];
            }
        }
    }
    let off = Matrix::from_fn(b, b, |l, k| {
        if l != k && mass[(l, k)] > 0.0 {
            toward[(l, k)] / mass[(l, k)] / b as f64
        } else {
            0.0
        }
    });
    TransitionMatrix::from_off_diagonal(off, t)
}

/// Item scores `π̂_G,l / Σ_k |G_k| π̂_G,k` for items in group `l`.
pub fn spread_group_scores(partition: &GroupPartition, group_scores: &[f64]) -> Vec<f64> {
    let sizes = partition.group_sizes();
    let total: f64 = sizes
        .iter()
        .zip(group_scores)
        .map(|(&s, &g)| s as f64 * g)
        .sum();
    partition
        .labels()
        .iter()
        .map(|&l| group_scores[l] / total)
        .collect()
}

pub fn refit<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    grid: &TimeGrid,
    partition: &GroupPartition,
) -> Result<GroupedScores> {
    let view = data.into();
    let b = partition.group_count();
    let n = partition.n_items();
    let mut group_scores = Matrix::zeros(grid.len(), b);
    let mut items = Matrix::zeros(grid.len(), n);
    for (k, &t) in grid.points().iter().enumerate() {
        let pg = if b == 1 {
            alloc::vec![1.0]
        } else {
            let p = group_transition(view, spec, partition, t);
            stationary_distribution(&p, STATIONARY_TOL, STATIONARY_MAX_ITER)
                .map_err(|e| e.at_time(t))?
                .distribution
        };
        group_scores.row_mut(k).copy_from_slice(&pg);
        items
            .row_mut(k)
            .copy_from_slice(&spread_group_scores(partition, &pg));
    }
    Ok(GroupedScores {
        partition: partition.clone(),
        group_scores,
        item_scores: ScoreTrajectory::new(grid.clone(), items)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{make_grid, ComparisonDataset, ComparisonRecord};
    use alloc::vec;

    fn data() -> ComparisonDataset {
        // items 0, 1 beat items 2, 3 three times out of four
        let mut recs = Vec::new();
        for k in 0..200 {
            let t = (k as f64 + 0.5) / 200.0;
            for (i, j) in [(0, 2), (0, 3), (1, 2), (1, 3)] {
                recs.push(ComparisonRecord::new(i, j, t, u8::from(k % 4 == 0)));
            }
            recs.push(ComparisonRecord::new(0, 1, t, (k % 2) as u8));
            recs.push(ComparisonRecord::new(2, 3, t, (k % 2) as u8));
        }
        ComparisonDataset::new(recs, 4, 1.0, None)
    }

    #[test]
    fn single_group_is_uniform() {
        let ds = data();
        let k = KernelSpec::epanechnikov(0.1).unwrap();
        let grid = make_grid(0.0, 1.0, 5).unwrap();
        let g = refit(&ds, &k, &grid, &GroupPartition::single(4)).unwrap();
        for r in 0..5 {
            assert!(g.item_scores.at(r).iter().all(|&v| (v - 0.25).abs() < 1e-15));
        }
    }

    #[test]
    fn pooled_ratio_is_preserved() {
        let ds = data();
        let k = KernelSpec::epanechnikov(0.1).unwrap();
        let grid = make_grid(0.2, 0.8, 3).unwrap();
        let part = GroupPartition::from_groups(&[vec![0, 1], vec![2, 3]]).unwrap();
        let g = refit(&ds, &k, &grid, &part).unwrap();
        for r in 0..3 {
            let s = g.item_scores.at(r);
            assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert_eq!(s[0], s[1]);
            assert_eq!(s[2], s[3]);
            let gs = g.group_scores.row(r);
            assert!((s[0] / (s[0] + s[2]) - gs[0] / (gs[0] + gs[1])).abs() < 1e-12);
            // three wins in four for the top group
            assert!((gs[0] / (gs[0] + gs[1]) - 0.75).abs() < 0.01);
        }
    }
}
