// SPDX-License-Identifier: MIT OR Apache-2.0

//! Independent reference implementations used by the integration tests.

#![allow(dead_code)]

use dynrank_core::changepoint::SegmentCache;
use dynrank_core::grouping::FusedDesign;
use dynrank_core::linalg::Matrix;
use dynrank_core::make_grid;
use rand::Rng;

/// Random substochastic off-diagonal walk with every pair present.
pub fn random_transition<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        let mut out = 0.0;
        for j in 0..n {
            if i != j {
                let v = rng.random_range(0.05..1.0) / n as f64;
                p[(i, j)] = v;
                out += v;
            }
        }
        p[(i, i)] = 1.0 - out;
    }
    p
}

/// Fused design on `m` grid points built from random walks and a random
/// item order.
pub fn random_design<R: Rng>(rng: &mut R, n: usize, m: usize) -> FusedDesign {
    let grid = make_grid(0.0, 1.0, m).unwrap();
    let walks: Vec<Matrix> = (0..m).map(|_| random_transition(rng, n)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    FusedDesign::from_transitions(grid, &walks, perm).unwrap()
}

/// `½ Σ_k ‖Y_k - X_k θ_{·k}‖² + λ Σ_i w_i ‖θ_i‖` from the raw blocks.
pub fn objective(design: &FusedDesign, theta: &Matrix, lambda: f64, weights: &[f64]) -> f64 {
    let mut f = 0.0;
    for k in 0..design.m() {
        let x = design.x_block(k);
        let y = design.y_block(k);
        for r in 0..x.rows() {
            let fit: f64 = (0..x.cols()).map(|c| x[(r, c)] * theta[(c, k)]).sum();
            f += 0.5 * (y[r] - fit).powi(2);
        }
    }
    for i in 0..theta.rows() {
        let nrm = theta.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
        f += lambda * weights[i] * nrm;
    }
    f
}

/// Exact minimizer over one gap row with all other rows fixed: solves
/// `min Σ_k (½ a_k s_k² - b_k s_k) + μ ‖s‖`.
fn row_update(a: &[f64], b: &[f64], mu: f64) -> Vec<f64> {
    let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bn <= mu {
        return vec![0.0; a.len()];
    }
    if mu == 0.0 {
        return a.iter().zip(b).map(|(a, b)| b / a).collect();
    }
    // the norm r of the solution satisfies Σ b_k² / (a_k r + μ)² = 1
    let phi = |r: f64| a.iter().zip(b).map(|(a, b)| (b / (a * r + mu)).powi(2)).sum::<f64>() - 1.0;
    let (mut lo, mut hi) = (0.0, 1.0);
    while phi(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    a.iter().zip(b).map(|(a, b)| b * r / (a * r + mu)).collect()
}

/// Block coordinate descent over gap rows until a full sweep moves the
/// objective by less than `1e-18` relative.
pub fn bcd_group_lasso(design: &FusedDesign, weights: &[f64], lambda: f64) -> Matrix {
    let d = design.dim();
    let m = design.m();
    let mut theta = Matrix::zeros(d, m);
    let mut prev = objective(design, &theta, lambda, weights);
    for _ in 0..200_000 {
        for i in 0..d {
            let mut a = vec![0.0; m];
            let mut b = vec![0.0; m];
            for k in 0..m {
                let x = design.x_block(k);
                let y = design.y_block(k);
                for r in 0..x.rows() {
                    let others: f64 = (0..d).filter(|&c| c != i).map(|c| x[(r, c)] * theta[(c, k)]).sum();
                    a[k] += x[(r, i)] * x[(r, i)];
                    b[k] += x[(r, i)] * (y[r] - others);
                }
            }
            let s = row_update(&a, &b, lambda * weights[i]);
            for k in 0..m {
                theta[(i, k)] = s[k];
            }
        }
        let f = objective(design, &theta, lambda, weights);
        if prev - f <= 1e-18 * f.abs().max(1e-300) {
            break;
        }
        prev = f;
    }
    theta
}

/// Least squares per grid point through the normal equations, solved by
/// Cholesky.
pub fn least_squares(design: &FusedDesign) -> Matrix {
    let d = design.dim();
    let mut theta = Matrix::zeros(d, design.m());
    for k in 0..design.m() {
        let x = design.x_block(k);
        let y = design.y_block(k);
        let mut g = vec![vec![0.0; d]; d];
        let mut c = vec![0.0; d];
        for r in 0..x.rows() {
            for i in 0..d {
                c[i] += x[(r, i)] * y[r];
                for j in 0..d {
                    g[i][j] += x[(r, i)] * x[(r, j)];
                }
            }
        }
        let mut l = vec![vec![0.0; d]; d];
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = g[i][j] - (0..j).map(|p| l[i][p] * l[j][p]).sum::<f64>();
                l[i][j] = if i == j { s.sqrt() } else { s / l[j][j] };
            }
        }
        let mut z = vec![0.0; d];
        for i in 0..d {
            z[i] = (c[i] - (0..i).map(|p| l[i][p] * z[p]).sum::<f64>()) / l[i][i];
        }
        for i in (0..d).rev() {
            theta[(i, k)] = (z[i] - (i + 1..d).map(|p| l[p][i] * theta[(p, k)]).sum::<f64>()) / l[i][i];
        }
    }
    theta
}

/// Best segmentation by trying every subset of interior knots.
pub fn exhaustive_segmentation(cache: &SegmentCache, gamma1: f64, gamma2: f64) -> (Vec<usize>, f64) {
    let last = cache.knots().len() - 1;
    let interior = last.saturating_sub(1);
    let mut best = (Vec::new(), f64::INFINITY);
    for mask in 0u32..(1 << interior) {
        let cuts: Vec<usize> = (1..last).filter(|&c| mask & (1 << (c - 1)) != 0).collect();
        let mut total = 0.0;
        let mut prev = 0;
        for &c in cuts.iter().chain(std::iter::once(&last)) {
            total += match cache.get(prev, c) {
                Some(f) => f.cost + gamma1 * f.partition.group_count() as f64 * (f.end - f.start) + gamma2,
                None => f64::INFINITY,
            };
            prev = c;
        }
        if total < best.1 {
            best = (cuts, total);
        }
    }
    best
}

/// Kendall τ-a by listing every pair and classifying it.
pub fn brute_tau(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let (mut conc, mut disc, mut pairs) = (0i64, 0i64, 0i64);
    for i in 0..n {
        for j in 0..n {
            if i < j {
                pairs += 1;
                let x = (a[i] > a[j], a[i] < a[j]);
                let y = (b[i] > b[j], b[i] < b[j]);
                if (x.0 && y.0) || (x.1 && y.1) {
                    conc += 1;
                } else if (x.0 && y.1) || (x.1 && y.0) {
                    disc += 1;
                }
            }
        }
    }
    (conc - disc) as f64 / pairs as f64
}

/// `(sensitivity, specificity)` from label vectors by pair enumeration.
pub fn brute_accuracy(est: &[usize], truth: &[usize]) -> (f64, f64) {
    let n = est.len();
    let (mut ss, mut st, mut ds, mut dt) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            if truth[i] == truth[j] {
                st += 1.0;
                if est[i] == est[j] {
                    ss += 1.0;
                }
            } else {
                dt += 1.0;
                if est[i] != est[j] {
                    ds += 1.0;
                }
            }
        }
    }
    (if st > 0.0 { ss / st } else { 1.0 }, if dt > 0.0 { ds / dt } else { 1.0 })
}
