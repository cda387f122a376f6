// SPDX-License-Identifier: MIT OR Apache-2.0

//! Adaptive group fused lasso by monotone accelerated proximal gradient.
//!
//! Minimizes
//!
//! ```text
//! F(θ) = ½ Σ_k ‖Y(t_k) - X₋₁(t_k) θ(t_k)‖² + λ Σ_i w_i ‖θ_i‖₂
//! ```
//!
//! where `θ_i` is gap row `i` across all grid points. The quadratic part is
//! block-diagonal in time and the penalty groups each row, so the proximal
//! map is row-wise soft-thresholding.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use super::design::FusedDesign;
use crate::linalg::{dot, norm2, spd_max_eigenvalue, Lu, Matrix};
use crate::{Error, Result};

/// Adaptive weights are capped here when a pilot gap row is (nearly) zero.
pub const MAX_WEIGHT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoOptions {
    /// KKT tolerance relative to the largest row gradient at `θ = 0`.
    pub tol: f64,
    pub max_iter: usize,
    /// Keep the objective value of every iteration.
    pub record_trace: bool,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            tol: 1e-8,
            max_iter: 200_000,
            record_trace: false,
        }
    }
}

/// Solution of one penalized problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPath {
    /// `(n - 1) x m`; row `i` is `θ_i` across the grid.
    pub theta: Matrix,
    pub lambda: f64,
    pub weights: Vec<f64>,
    /// Rows with `θ̂_i ≠ 0`.
    pub support: Vec<usize>,
    pub objective: f64,
    pub iterations: usize,
    /// Largest absolute KKT violation at the solution.
    pub kkt: f64,
    pub trace: Option<Vec<f64>>,
}

impl ThetaPath {
    /// `‖θ̂_i‖₂` of every row.
    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.theta.rows()).map(|i| norm2(self.theta.row(i))).collect()
    }

    /// Rows with `‖θ̂_i‖₂ / √m > eps`.
    pub fn thresholded_support(&self, eps: f64) -> Vec<usize> {
        let sm = (self.theta.cols() as f64).sqrt();
        self.row_norms()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v / sm > eps)
            .map(|(i, _)| i)
            .collect()
    }
}

/// `w_i = √m / ‖θ̃_i‖₂`, capped at [`MAX_WEIGHT`].
pub fn adaptive_weights(theta_tilde: &Matrix) -> Vec<f64> {
    let sm = (theta_tilde.cols() as f64).sqrt();
    (0..theta_tilde.rows())
        .map(|i| {
            let nrm = norm2(theta_tilde.row(i));
            if nrm * MAX_WEIGHT <= sm {
                MAX_WEIGHT
            } else {
                sm / nrm
            }
        })
        .collect()
}

/// Working layout: column `k` of θ stored contiguously at `k * d .. (k + 1) * d`.
struct Problem<'a> {
    design: &'a FusedDesign,
    d: usize,
    m: usize,
    lambda: f64,
    weights: &'a [f64],
}

impl Problem<'_> {
    fn to_cols(&self, theta: &Matrix) -> Vec<f64> {
        let mut out = vec![0.0; self.d * self.m];
        for i in 0..self.d {
            for k in 0..self.m {
                out[k * self.d + i] = theta[(i, k)];
            }
        }
        out
    }

    fn to_matrix(&self, cols: &[f64]) -> Matrix {
        Matrix::from_fn(self.d, self.m, |i, k| cols[k * self.d + i])
    }

    /// Smooth part of the objective; writes its gradient into `grad`.
    fn smooth(&self, th: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.d;
        let mut f = 0.0;
        for k in 0..self.m {
            let col = &th[k * d..(k + 1) * d];
            let g = self.design.gram(k);
            let c = self.design.cross(k);
            let out = &mut grad[k * d..(k + 1) * d];
            for i in 0..d {
                out[i] = dot(g.row(i), col) - c[i];
            }
            // ½θᵀGθ - cᵀθ + ½‖Y‖² = ½θᵀ(Gθ - c) - ½cᵀθ + ½‖Y‖²
            f += 0.5 * (dot(col, out) - dot(c, col) + self.design.y_norm_sq(k));
        }
        f
    }

    fn smooth_value(&self, th: &[f64], scratch: &mut [f64]) -> f64 {
        self.smooth(th, scratch)
    }

    /// `f(z) - f(x) = Σ_k ½(z - x)ᵀG(z + x) - cᵀ(z - x)` for the smooth part.
    fn smooth_diff(&self, z: &[f64], x: &[f64]) -> f64 {
        let d = self.d;
        let mut out = 0.0;
        let mut diff = vec![0.0; d];
        let mut sum = vec![0.0; d];
        for k in 0..self.m {
            let (zk, xk) = (&z[k * d..(k + 1) * d], &x[k * d..(k + 1) * d]);
            for i in 0..d {
                diff[i] = zk[i] - xk[i];
                sum[i] = zk[i] + xk[i];
            }
            let g = self.design.gram(k);
            let mut quad = 0.0;
            for i in 0..d {
                if diff[i] != 0.0 {
                    quad += diff[i] * dot(g.row(i), &sum);
                }
            }
            out += 0.5 * quad - dot(self.design.cross(k), &diff);
        }
        out
    }

    fn row_norm(&self, v: &[f64], i: usize) -> f64 {
        (0..self.m).map(|k| v[k * self.d + i].powi(2)).sum::<f64>().sqrt()
    }

    fn penalty(&self, th: &[f64]) -> f64 {
        if self.lambda == 0.0 {
            return 0.0;
        }
        self.lambda
            * (0..self.d)
                .map(|i| self.weights[i] * self.row_norm(th, i))
                .sum::<f64>()
    }

    /// Row-wise soft-thresholding of `v` with thresholds `step λ w_i`.
    fn prox(&self, v: &mut [f64], step: f64) {
        for i in 0..self.d {
            let tau = step * self.lambda * self.weights[i];
            let nrm = self.row_norm(v, i);
            let s = if nrm <= tau { 0.0 } else { 1.0 - tau / nrm };
            for k in 0..self.m {
                v[k * self.d + i] *= s;
            }
        }
    }

    /// Largest KKT violation given the smooth gradient at `th`.
    fn kkt(&self, th: &[f64], grad: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.d {
            let nrm = self.row_norm(th, i);
            let lw = self.lambda * self.weights[i];
            let r = if nrm > 0.0 {
                (0..self.m)
                    .map(|k| {
                        let idx = k * self.d + i;
                        (grad[idx] + lw * th[idx] / nrm).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            } else {
                (self.row_norm(grad, i) - lw).max(0.0)
            };
            worst = worst.max(r);
        }
        worst
    }

    /// Largest row gradient norm at zero, the KKT scale.
    fn scale(&self) -> f64 {
        let d = self.d;
        (0..d)
            .map(|i| {
                (0..self.m)
                    .map(|k| self.design.cross(k)[i].powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Full objective `F(θ)`.
pub fn lasso_objective(design: &FusedDesign, theta: &Matrix, lambda: f64, weights: &[f64]) -> f64 {
    let pb = Problem {
        design,
        d: design.dim(),
        m: design.m(),
        lambda,
        weights,
    };
    let th = pb.to_cols(theta);
    let mut scratch = vec![0.0; th.len()];
    pb.smooth_value(&th, &mut scratch) + pb.penalty(&th)
}

/// Smallest `λ` with `θ̂ = 0`: `max_i ‖X_iᵀY‖ / w_i`.
pub fn lambda_max(design: &FusedDesign, weights: &[f64]) -> f64 {
    (0..design.dim())
        .map(|i| {
            let g = (0..design.m())
                .map(|k| design.cross(k)[i].powi(2))
                .sum::<f64>()
                .sqrt();
            g / weights[i]
        })
        .fold(0.0, f64::max)
}

/// `count` log-spaced values from `lambda_max` down to `lambda_max * ratio`.
pub fn lambda_grid(lambda_max: f64, count: usize, ratio: f64) -> Vec<f64> {
    if count == 1 {
        return vec![lambda_max];
    }
    let (hi, lo) = (lambda_max.ln(), (lambda_max * ratio).ln());
    (0..count)
        .map(|j| (hi + (lo - hi) * j as f64 / (count - 1) as f64).exp())
        .collect()
}

pub fn adaptive_group_lasso(
    design: &FusedDesign,
    weights: &[f64],
    lambda: f64,
    opts: &LassoOptions,
) -> Result<ThetaPath> {
    adaptive_group_lasso_from(design, weights, lambda, None, opts)
}

/// Same as [`adaptive_group_lasso`], starting from `init` when given.
pub fn adaptive_group_lasso_from(
    design: &FusedDesign,
    weights: &[f64],
    lambda: f64,
    init: Option<&Matrix>,
    opts: &LassoOptions,
) -> Result<ThetaPath> {
    let d = design.dim();
    let m = design.m();
    if weights.len() != d {
        return Err(Error::ShapeMismatch(alloc::format!(
            "{} weights for {d} gap rows",
            weights.len()
        )));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::invalid("adaptive weights must be finite and positive"));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(alloc::format!("lambda must be nonnegative, got {lambda}")));
    }
    let pb = Problem {
        design,
        d,
        m,
        lambda,
        weights,
    };
    let tol_abs = opts.tol * pb.scale().max(f64::MIN_POSITIVE);

    if lambda == 0.0 {
        if let Some(cols) = least_squares(design) {
            let mut grad = vec![0.0; cols.len()];
            let f = pb.smooth(&cols, &mut grad);
            let kkt = pb.kkt(&cols, &grad);
            return Ok(finish(&pb, cols, f, 1, kkt, opts.record_trace.then(|| vec![f])));
        }
    }

    let lip = (0..m)
        .map(|k| spd_max_eigenvalue(design.gram(k), 10_000, 1e-12))
        .fold(0.0, f64::max)
        * 1.05;
    if lip == 0.0 {
        // no signal: zero is optimal
        let cols = vec![0.0; d * m];
        let mut grad = vec![0.0; cols.len()];
        let f = pb.smooth(&cols, &mut grad);
        return Ok(finish(&pb, cols, f, 0, 0.0, opts.record_trace.then(|| vec![f])));
    }
    let step = 1.0 / lip;

    let mut x = match init {
        Some(t) => {
            if t.rows() != d || t.cols() != m {
                return Err(Error::ShapeMismatch("initial theta has the wrong shape".into()));
            }
            pb.to_cols(t)
        }
        None => vec![0.0; d * m],
    };
    let mut grad = vec![0.0; d * m];
    let mut fx = pb.smooth(&x, &mut grad) + pb.penalty(&x);
    let mut kkt = pb.kkt(&x, &grad);
    let mut trace = opts.record_trace.then(|| vec![fx]);
    if kkt <= tol_abs {
        return Ok(finish(&pb, x, fx, 0, kkt, trace));
    }

    let mut y = x.clone();
    let mut z = vec![0.0; d * m];
    let mut x_prev = x.clone();
    let mut t: f64 = 1.0;
    let mut iter = 0;
    while iter < opts.max_iter {
        iter += 1;
        pb.smooth(&y, &mut grad);
        for ((zv, yv), gv) in z.iter_mut().zip(&y).zip(&grad) {
            *zv = yv - step * gv;
        }
        pb.prox(&mut z, step);
        // F(z) - F(x) from the difference form, free of the cancellation
        // in ½θᵀGθ - cᵀθ + ½‖Y‖² near an exact fit
        let delta = pb.smooth_diff(&z, &x) + pb.penalty(&z) - pb.penalty(&x);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        x_prev.copy_from_slice(&x);
        if delta <= 0.0 {
            x.copy_from_slice(&z);
            fx += delta;
            let a = (t - 1.0) / t_next;
            for j in 0..y.len() {
                y[j] = x[j] + a * (x[j] - x_prev[j]);
            }
            t = t_next;
        } else {
            // monotone step: keep x and restart the momentum
            if t == 1.0 {
                // A plain proximal gradient step from x descends in exact
                // arithmetic; a positive delta here is rounding noise.
                x.copy_from_slice(&z);
            }
            y.copy_from_slice(&x);
            t = 1.0;
        }
        if let Some(tr) = trace.as_mut() {
            tr.push(fx);
        }
        if iter % 10 == 0 || iter == opts.max_iter {
            pb.smooth(&x, &mut grad);
            kkt = pb.kkt(&x, &grad);
            if kkt <= tol_abs {
                return Ok(finish(&pb, x, fx, iter, kkt, trace));
            }
        }
    }
    Err(Error::convergence("group lasso", iter, kkt))
}

/// Per-time unpenalized solves `G_k θ_k = c_k`.
fn least_squares(design: &FusedDesign) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(design.dim() * design.m());
    for k in 0..design.m() {
        let lu = Lu::new(design.gram(k), 1e-14)?;
        out.extend(lu.solve(design.cross(k)));
    }
    Some(out)
}

fn finish(
    pb: &Problem<'_>,
    cols: Vec<f64>,
    objective: f64,
    iterations: usize,
    kkt: f64,
    trace: Option<Vec<f64>>,
) -> ThetaPath {
    let theta = pb.to_matrix(&cols);
    let support = (0..pb.d).filter(|&i| pb.row_norm(&cols, i) > 0.0).collect();
    ThetaPath {
        theta,
        lambda: pb.lambda,
        weights: pb.weights.to_vec(),
        support,
        objective,
        iterations,
        kkt,
        trace,
    }
}

/// Degrees of freedom `Σ 1{θ̂_i ≠ 0} + Σ (‖θ̂_i‖ / ‖θ̃_i‖)(m - 1)`, with
/// `‖θ̃_i‖ = √m / w_i` recovered from the weights.
pub fn degrees_of_freedom(path: &ThetaPath) -> f64 {
    let m = path.theta.cols() as f64;
    let sm = m.sqrt();
    path.row_norms()
        .iter()
        .zip(&path.weights)
        .filter(|(&nrm, _)| nrm > 0.0)
        .map(|(&nrm, &w)| 1.0 + nrm * w / sm * (m - 1.0))
        .sum()
}

/// `nm · log(RSS / nm + c0 · Var(Y)) + log(nm) · ⌊df⌋`.
pub fn ebic(design: &FusedDesign, path: &ThetaPath, c0: f64) -> f64 {
    let nm = (design.n_items() * design.m()) as f64;
    let rss = design.rss(&path.theta);
    let fit = (rss / nm + c0 * design.response_variance()).max(f64::MIN_POSITIVE);
    nm * fit.ln() + nm.ln() * degrees_of_freedom(path).floor()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouping::transform::theta_from_rows;
    use crate::spectral::ideal_transition;
    use crate::types::make_grid;

    fn toy_design() -> FusedDesign {
        let grid = make_grid(0.0, 1.0, 3).unwrap();
        let ps: Vec<Matrix> = [0.0, 0.1, 0.2]
            .iter()
            .map(|s| {
                let pi = [0.35 + s * 0.1, 0.3, 0.2 - s * 0.1, 0.15];
                let mut p = ideal_transition(&pi, 0.0).unwrap().entries().clone();
                // nudge off exact stationarity so the residual is not zero
                p[(0, 1)] += 0.01;
                p[(0, 0)] -= 0.01;
                p
            })
            .collect();
        FusedDesign::from_transitions(grid, &ps, (0..4).collect()).unwrap()
    }

    #[test]
    fn zero_lambda_is_least_squares() {
        let d = toy_design();
        let w = vec![1.0; 3];
        let p = adaptive_group_lasso(&d, &w, 0.0, &LassoOptions::default()).unwrap();
        for k in 0..3 {
            let col = p.theta.column(k);
            let g = d.gram(k).mul_vec(&col);
            for (a, b) in g.iter().zip(d.cross(k)) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn huge_lambda_gives_zero() {
        let d = toy_design();
        let w = vec![1.0; 3];
        let lm = lambda_max(&d, &w);
        let p = adaptive_group_lasso(&d, &w, lm * 1.0001, &LassoOptions::default()).unwrap();
        assert!(p.support.is_empty());
        assert_eq!(p.theta.max_abs(), 0.0);
        let below = adaptive_group_lasso(&d, &w, lm * 0.9, &LassoOptions::default()).unwrap();
        assert!(!below.support.is_empty());
    }

    #[test]
    fn objective_never_increases() {
        let d = toy_design();
        let w = vec![1.0, 2.0, 0.5];
        let lm = lambda_max(&d, &w);
        let opts = LassoOptions {
            record_trace: true,
            ..LassoOptions::default()
        };
        let p = adaptive_group_lasso(&d, &w, 0.3 * lm, &opts).unwrap();
        let tr = p.trace.unwrap();
        assert!(tr.windows(2).all(|w| w[1] <= w[0]));
        assert!(p.kkt <= 1e-8 * lm.max(1e-300) * 10.0 + 1e-20);
    }

    #[test]
    fn warm_and_cold_starts_agree() {
        let d = toy_design();
        let w = vec![1.0; 3];
        let lm = lambda_max(&d, &w);
        let opts = LassoOptions {
            tol: 1e-10,
            ..LassoOptions::default()
        };
        let cold = adaptive_group_lasso(&d, &w, 0.2 * lm, &opts).unwrap();
        let init = Matrix::from_fn(3, 3, |i, k| 0.01 * (i + k) as f64);
        let warm = adaptive_group_lasso_from(&d, &w, 0.2 * lm, Some(&init), &opts).unwrap();
        assert!((cold.objective - warm.objective).abs() < 1e-8);
    }

    #[test]
    fn df_of_pilot_is_s_times_m() {
        let grid = make_grid(0.0, 1.0, 4).unwrap();
        let scores = Matrix::from_fn(4, 4, |k, j| [0.4, 0.3, 0.2, 0.1][j] + 0.01 * k as f64 * if j == 0 { 1.0 } else if j == 3 { -1.0 } else { 0.0 });
        let theta = theta_from_rows(&scores, &[0, 1, 2, 3]);
        let path = ThetaPath {
            weights: adaptive_weights(&theta),
            support: vec![0, 1, 2],
            theta,
            lambda: 0.0,
            objective: 0.0,
            iterations: 0,
            kkt: 0.0,
            trace: None,
        };
        let _ = grid;
        assert!((degrees_of_freedom(&path) - 12.0).abs() < 1e-12);
    }

    #[test]
    fn ebic_of_empty_path() {
        let d = toy_design();
        let w = vec![1.0; 3];
        let zero = ThetaPath {
            theta: Matrix::zeros(3, 3),
            lambda: 1.0,
            weights: w,
            support: vec![],
            objective: 0.0,
            iterations: 0,
            kkt: 0.0,
            trace: None,
        };
        let nm = 12.0;
        let rss: f64 = (0..3).map(|k| d.y_norm_sq(k)).sum();
        let want = nm * (rss / nm + 0.1 * d.response_variance()).ln();
        assert!((ebic(&d, &zero, 0.1) - want).abs() < 1e-12);
    }

    #[test]
    fn weights_capped() {
        let w = adaptive_weights(&Matrix::zeros(2, 5));
        assert_eq!(w, vec![MAX_WEIGHT; 2]);
    }

    #[test]
    fn grid_is_log_spaced() {
        let g = lambda_grid(1.0, 5, 1e-4);
        assert!((g[0] - 1.0).abs() < 1e-15 && (g[4] - 1e-4).abs() < 1e-15);
        assert!((g[1] - 0.1).abs() < 1e-12);
    }
}
