// SPDX-License-Identifier: MIT OR Apache-2.0

//! The difference transform `θ = Q(π - e/n)` between score vectors and
//! consecutive score gaps.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::linalg::Matrix;
use crate::types::{ScoreTrajectory, TimeGrid};
use crate::Result;

/// `Q_ij = 1` if `i = j` or `i = n`, `-1` if `i < n` and `j = i + 1`.
pub fn q_matrix(n: usize) -> Matrix {
    assert!(n >= 2, "the difference transform needs at least two items");
    Matrix::from_fn(n, n, |i, j| {
        if i == n - 1 || i == j {
            1.0
        } else if j == i + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// Closed-form `Q⁻¹`.
pub fn q_inverse(n: usize) -> Matrix {
    assert!(n >= 2, "the difference transform needs at least two items");
    let nf = n as f64;
    Matrix::from_fn(n, n, |r, c| {
        if c == n - 1 {
            1.0 / nf
        } else {
            -((c + 1) as f64) / nf + if c >= r { 1.0 } else { 0.0 }
        }
    })
}

/// `θ_c(t) = π_perm[c](t) - π_perm[c+1](t)` for `c < n - 1`, as an
/// `(n - 1) x m` matrix. The structurally zero last component is dropped.
pub(crate) fn theta_from_rows(scores: &Matrix, perm: &[usize]) -> Matrix {
    let n = perm.len();
    let m = scores.rows();
    Matrix::from_fn(n - 1, m, |c, k| {
        let row = scores.row(k);
        row[perm[c]] - row[perm[c + 1]]
    })
}

/// Gap matrix of a trajectory in its own item order.
pub fn theta_from_scores(traj: &ScoreTrajectory) -> Matrix {
    let perm: Vec<usize> = (0..traj.n_items()).collect();
    theta_from_rows(traj.scores(), &perm)
}

/// Gap matrix of a trajectory after reordering items by `perm`.
pub fn theta_from_scores_permuted(traj: &ScoreTrajectory, perm: &[usize]) -> Matrix {
    theta_from_rows(traj.scores(), perm)
}

/// Score vector `Q⁻¹θ + e/n` of one gap vector (length `n - 1`).
pub fn scores_from_gaps(gaps: &[f64]) -> Vec<f64> {
    let n = gaps.len() + 1;
    let nf = n as f64;
    // π_r = 1/n + Σ_{c >= r} θ_c - Σ_c (c + 1) θ_c / n
    let shift: f64 = gaps
        .iter()
        .enumerate()
        .map(|(c, &g)| (c + 1) as f64 * g)
        .sum::<f64>()
        / nf;
    let mut out = alloc::vec![0.0; n];
    let mut tail = 0.0;
    for r in (0..n).rev() {
        if r < n - 1 {
            tail += gaps[r];
        }
        out[r] = 1.0 / nf + tail - shift;
    }
    out
}

/// Inverse of [`theta_from_scores`].
pub fn scores_from_theta(theta: &Matrix, grid: &TimeGrid) -> Result<ScoreTrajectory> {
    let n = theta.rows() + 1;
    let m = theta.cols();
    let mut scores = Matrix::zeros(m, n);
    for k in 0..m {
        let gaps = theta.column(k);
        scores.row_mut(k).copy_from_slice(&scores_from_gaps(&gaps));
    }
    ScoreTrajectory::new(grid.clone(), scores)
}

/// Items ordered by descending discrete norm `‖π_i‖₂` over the grid, ties
/// broken by index.
pub fn sort_items(traj: &ScoreTrajectory) -> Vec<usize> {
    let n = traj.n_items();
    let norms: Vec<f64> = (0..n)
        .map(|i| traj.item(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]).then(a.cmp(&b)));
    perm
}

/// Items ordered so that similar trajectories are adjacent.
///
/// Builds an average-linkage dendrogram on the Euclidean distances between
/// item trajectories and reads off its leaves, putting the child with the
/// larger mean score norm first at every merge. Items of a well-separated
/// cluster end up contiguous even when cluster trajectories cross, which a
/// plain sort by norm does not guarantee.
pub fn seriate_items(traj: &ScoreTrajectory) -> Vec<usize> {
    let n = traj.n_items();
    let items: Vec<Vec<f64>> = (0..n).map(|i| traj.item(i)).collect();
    let norms: Vec<f64> = items
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut dist = Matrix::from_fn(n, n, |a, b| {
        items[a]
            .iter()
            .zip(&items[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    });
    // (members in order, summed norm); None once merged away
    let mut clusters: Vec<Option<(Vec<usize>, f64)>> =
        (0..n).map(|i| Some((alloc::vec![i], norms[i]))).collect();
    for _ in 1..n {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for a in 0..n {
            if clusters[a].is_none() {
                continue;
            }
            for b in a + 1..n {
                if clusters[b].is_some() && dist[(a, b)] < best.2 {
                    best = (a, b, dist[(a, b)]);
                }
            }
        }
        let (a, b, _) = best;
        let (ma, sa) = clusters[a].take().unwrap();
        let (mb, sb) = clusters[b].take().unwrap();
        let (na, nb) = (ma.len() as f64, mb.len() as f64);
        for c in 0..n {
            if clusters[c].is_some() {
                let d = (na * dist[(a, c)] + nb * dist[(b, c)]) / (na + nb);
                dist[(a, c)] = d;
                dist[(c, a)] = d;
            }
        }
        let merged = if sa / na >= sb / nb {
            ma.into_iter().chain(mb).collect()
        } else {
            mb.into_iter().chain(ma).collect()
        };
        clusters[a] = Some((merged, sa + sb));
    }
    clusters.into_iter().flatten().next().map_or_else(Vec::new, |c| c.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::make_grid;

    #[test]
    fn q_three() {
        let q = q_matrix(3);
        assert_eq!(
            q,
            Matrix::from_rows(&[&[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0], &[1.0, 1.0, 1.0]])
        );
    }

    #[test]
    fn q_inverse_is_inverse() {
        for n in [2, 3, 7, 50, 200] {
            let prod = q_matrix(n).matmul(&q_inverse(n));
            assert!(prod.sub(&Matrix::identity(n)).max_abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn constant_scores_give_constant_gaps() {
        let grid = make_grid(0.0, 1.0, 4).unwrap();
        let scores = Matrix::from_fn(4, 3, |_, j| [0.5, 0.3, 0.2][j]);
        let traj = ScoreTrajectory::new(grid, scores).unwrap();
        let th = theta_from_scores(&traj);
        for k in 0..4 {
            assert!((th[(0, k)] - 0.2).abs() < 1e-15);
            assert!((th[(1, k)] - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn gaps_match_q_product() {
        let pi = [0.1, 0.4, 0.15, 0.35];
        let q = q_matrix(4);
        let centred: Vec<f64> = pi.iter().map(|p| p - 0.25).collect();
        let full = q.mul_vec(&centred);
        assert!(full[3].abs() < 1e-15);
        let back = scores_from_gaps(&full[..3]);
        for (a, b) in back.iter().zip(&pi) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn uniform_is_zero() {
        let grid = make_grid(0.0, 1.0, 2).unwrap();
        let traj = ScoreTrajectory::new(grid, Matrix::from_fn(2, 5, |_, _| 0.2)).unwrap();
        assert!(theta_from_scores(&traj).max_abs() < 1e-16);
    }

    #[test]
    fn sort_keeps_sorted_input() {
        let grid = make_grid(0.0, 1.0, 1).unwrap();
        let traj = ScoreTrajectory::new(grid, Matrix::from_rows(&[&[0.5, 0.3, 0.2]])).unwrap();
        assert_eq!(sort_items(&traj), [0, 1, 2]);
    }

    #[test]
    fn seriation_keeps_crossing_groups_together() {
        // items 1 and 3 share a rising curve, 0 and 2 a falling one; their
        // norms interleave
        let grid = make_grid(0.0, 1.0, 4).unwrap();
        let rise = [0.10, 0.20, 0.30, 0.40];
        let fall = [0.41, 0.29, 0.21, 0.11];
        let scores = Matrix::from_fn(4, 4, |k, j| match j {
            0 => fall[k] * 0.98,
            2 => fall[k] * 1.02,
            1 => rise[k] * 0.99,
            _ => rise[k] * 1.01,
        });
        let rows: Vec<f64> = (0..4).map(|k| scores.row(k).iter().sum()).collect();
        let scores = Matrix::from_fn(4, 4, |k, j| scores[(k, j)] / rows[k]);
        let traj = ScoreTrajectory::new(grid, scores).unwrap();
        let order = seriate_items(&traj);
        let pos = |i: usize| order.iter().position(|&x| x == i).unwrap();
        assert_eq!(pos(0).abs_diff(pos(2)), 1);
        assert_eq!(pos(1).abs_diff(pos(3)), 1);
    }

    #[test]
    fn sort_swaps_two() {
        let grid = make_grid(0.0, 1.0, 1).unwrap();
        let traj = ScoreTrajectory::new(grid, Matrix::from_rows(&[&[0.3, 0.7]])).unwrap();
        assert_eq!(sort_items(&traj), [1, 0]);
    }
}
