// SPDX-License-Identifier: MIT OR Apache-2.0

//! Accuracy measures for rankings, score trajectories, groupings and
//! change-point sets.

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::types::{GroupPartition, ScoreTrajectory};
use crate::{Error, Result};

/// Kendall τ-a: `(concordant - discordant) / (n(n-1)/2)`. Pairs tied in
/// either vector count as neither.
pub fn kendall_tau(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "score vectors differ in length");
    let n = a.len();
    if n < 2 {
        return 0.0;
    }
    let mut net: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let s = (a[i] - a[j]).signum() * (b[i] - b[j]).signum();
            if a[i] != a[j] && b[i] != b[j] {
                net += s as i64;
            }
        }
    }
    net as f64 / (n * (n - 1) / 2) as f64
}

/// Kendall τ-b: `(concordant - discordant) / sqrt((P - T_a)(P - T_b))`
/// where `P` counts all pairs and `T_a`, `T_b` the pairs tied in each
/// vector. Equals τ-a when neither vector has ties. Returns 0 when either
/// vector is constant.
pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "score vectors differ in length");
    let n = a.len();
    let (mut net, mut ties_a, mut ties_b) = (0i64, 0usize, 0usize);
    for i in 0..n {
        for j in i + 1..n {
            let (da, db) = (a[i] - a[j], b[i] - b[j]);
            ties_a += usize::from(da == 0.0);
            ties_b += usize::from(db == 0.0);
            if da != 0.0 && db != 0.0 {
                net += (da.signum() * db.signum()) as i64;
            }
        }
    }
    let pairs = n * n.saturating_sub(1) / 2;
    let denom = ((pairs - ties_a) as f64 * (pairs - ties_b) as f64).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        net as f64 / denom
    }
}

fn check_shapes(est: &ScoreTrajectory, truth: &ScoreTrajectory) -> Result<()> {
    if est.n_items() != truth.n_items() || est.grid().len() != truth.grid().len() {
        return Err(Error::invalid(alloc::format!(
            "trajectories differ in shape: {}x{} vs {}x{}",
            est.grid().len(),
            est.n_items(),
            truth.grid().len(),
            truth.n_items()
        )));
    }
    Ok(())
}

/// Kendall τ at every grid point, averaged over the grid.
pub fn mean_kendall_tau(est: &ScoreTrajectory, truth: &ScoreTrajectory) -> Result<f64> {
    check_shapes(est, truth)?;
    let m = est.grid().len();
    Ok((0..m).map(|k| kendall_tau(est.at(k), truth.at(k))).sum::<f64>() / m as f64)
}

/// Kendall τ-b at every grid point, averaged over the grid.
pub fn mean_kendall_tau_b(est: &ScoreTrajectory, truth: &ScoreTrajectory) -> Result<f64> {
    check_shapes(est, truth)?;
    let m = est.grid().len();
    Ok((0..m).map(|k| kendall_tau_b(est.at(k), truth.at(k))).sum::<f64>() / m as f64)
}

/// Mean squared score error over grid points and items, multiplied by
/// `n²` so that it is measured relative to the uniform score `1/n`.
pub fn trajectory_mse(est: &ScoreTrajectory, truth: &ScoreTrajectory) -> Result<f64> {
    check_shapes(est, truth)?;
    let n = est.n_items() as f64;
    let (a, b) = (est.scores().as_slice(), truth.scores().as_slice());
    let sse: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(n * n * sse / a.len() as f64)
}

/// Pair counts behind sensitivity and specificity.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GroupingConfusion {
    /// Truly same-group pairs estimated together.
    pub same_correct: usize,
    pub same_total: usize,
    /// Truly different-group pairs estimated apart.
    pub diff_correct: usize,
    pub diff_total: usize,
}

impl GroupingConfusion {
    /// `same_correct / same_total`, 1 when there are no same-group pairs.
    pub fn sensitivity(&self) -> f64 {
        if self.same_total == 0 {
            1.0
        } else {
            self.same_correct as f64 / self.same_total as f64
        }
    }

    /// `diff_correct / diff_total`, 1 when there are no different-group
    /// pairs.
    pub fn specificity(&self) -> f64 {
        if self.diff_total == 0 {
            1.0
        } else {
            self.diff_correct as f64 / self.diff_total as f64
        }
    }
}

pub fn grouping_confusion(est: &GroupPartition, truth: &GroupPartition) -> Result<GroupingConfusion> {
    if est.n_items() != truth.n_items() {
        return Err(Error::invalid("partitions cover different item counts"));
    }
    let (e, t) = (est.labels(), truth.labels());
    let mut c = GroupingConfusion::default();
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let together = e[i] == e[j];
            if t[i] == t[j] {
                c.same_total += 1;
                c.same_correct += usize::from(together);
            } else {
                c.diff_total += 1;
                c.diff_correct += usize::from(!together);
            }
        }
    }
    Ok(c)
}

/// `(sensitivity, specificity)` over all unordered item pairs.
pub fn grouping_accuracy(est: &GroupPartition, truth: &GroupPartition) -> Result<(f64, f64)> {
    let c = grouping_confusion(est, truth)?;
    Ok((c.sensitivity(), c.specificity()))
}

/// Hausdorff distance between two finite point sets. An empty set against
/// a nonempty one is at distance `horizon`; two empty sets are at 0.
pub fn hausdorff(a: &[f64], b: &[f64], horizon: f64) -> f64 {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return 0.0,
        (true, false) | (false, true) => return horizon,
        _ => {}
    }
    let directed = |x: &[f64], y: &[f64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::types::make_grid;
    use alloc::vec;

    #[test]
    fn tau_extremes() {
        let a = [0.4, 0.3, 0.2, 0.1];
        let r = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(kendall_tau(&a, &a), 1.0);
        assert_eq!(kendall_tau(&a, &r), -1.0);
    }

    #[test]
    fn tau_ties_count_as_neither() {
        assert_eq!(kendall_tau(&[1.0, 1.0, 0.0], &[3.0, 2.0, 1.0]), 2.0 / 3.0);
    }

    #[test]
    fn tau_b_with_grouped_truth() {
        // three groups of sizes 2, 2, 3 in the truth; estimate ranks all
        // between-group pairs right and splits ties arbitrarily
        let truth = [3.0, 3.0, 2.0, 2.0, 1.0, 1.0, 1.0];
        let est = [0.30, 0.28, 0.15, 0.16, 0.05, 0.04, 0.02];
        let between = 21 - 1 - 1 - 3;
        let want = between as f64 / ((21.0f64) * between as f64).sqrt();
        assert!((kendall_tau_b(&est, &truth) - want).abs() < 1e-15);
        assert_eq!(kendall_tau_b(&truth, &truth), 1.0);
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]));
    }

    #[test]
    fn mse_zero_on_truth() {
        let grid = make_grid(0.0, 1.0, 2).unwrap();
        let t = ScoreTrajectory::new(grid, Matrix::from_fn(2, 3, |_, j| [0.5, 0.3, 0.2][j])).unwrap();
        assert_eq!(trajectory_mse(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn mse_hand_formula() {
        // truth uniform over 4 items; estimate moves 0.05 from item 3 to item 0
        let grid = make_grid(0.0, 1.0, 1).unwrap();
        let truth = ScoreTrajectory::new(grid.clone(), Matrix::from_rows(&[&[0.25; 4]])).unwrap();
        let est = ScoreTrajectory::new(grid, Matrix::from_rows(&[&[0.3, 0.25, 0.25, 0.2]])).unwrap();
        let want = 16.0 * (2.0 * 0.05f64.powi(2)) / 4.0;
        assert!((trajectory_mse(&est, &truth).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn mse_shape_mismatch() {
        let g1 = make_grid(0.0, 1.0, 1).unwrap();
        let a = ScoreTrajectory::new(g1.clone(), Matrix::from_rows(&[&[0.5, 0.5]])).unwrap();
        let b = ScoreTrajectory::new(g1, Matrix::from_rows(&[&[0.2, 0.3, 0.5]])).unwrap();
        assert!(matches!(trajectory_mse(&a, &b), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn accuracy_of_truth_and_single_group() {
        let truth = GroupPartition::from_groups(&[vec![0, 1], vec![2, 3]]).unwrap();
        assert_eq!(grouping_accuracy(&truth, &truth).unwrap(), (1.0, 1.0));
        let one = GroupPartition::single(4);
        assert_eq!(grouping_accuracy(&one, &truth).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn hausdorff_cases() {
        assert_eq!(hausdorff(&[0.3, 0.6], &[0.3, 0.6], 1.0), 0.0);
        assert!((hausdorff(&[0.3], &[0.5], 1.0) - 0.2).abs() < 1e-15);
        assert!((hausdorff(&[0.25, 0.75], &[0.3], 1.0) - 0.45).abs() < 1e-15);
        assert_eq!(hausdorff(&[], &[0.5], 1.0), 1.0);
        assert_eq!(hausdorff(&[], &[], 1.0), 0.0);
    }
}
