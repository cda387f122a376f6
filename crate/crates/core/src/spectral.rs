// SPDX-License-Identifier: MIT OR Apache-2.0

//! Kernel rank centrality: the stationary distribution of the
//! kernel-smoothed comparison random walk.

use alloc::vec;
use alloc::vec::Vec;


use crate::kernel::KernelSpec;
use crate::linalg::{self, norm2, Matrix};
use crate::types::{DataView, PairwiseMass, ScoreTrajectory, TimeGrid};
use crate::{Error, Result};

/// Row-stochastic transition matrix at one evaluation time.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    entries: Matrix,
    t: f64,
    unsupported_pairs: usize,
}

impl TransitionMatrix {
    /// Completes the diagonal of a matrix of off-diagonal rates.
    pub fn from_off_diagonal(mut entries: Matrix, t: f64) -> Self {
        let n = entries.rows();
        for i in 0..n {
            entries[(i, i)] = 0.0;
            let out: f64 = entries.row(i).iter().sum();
            entries[(i, i)] = 1.0 - out;
        }
        TransitionMatrix {
            entries,
            t,
            unsupported_pairs: 0,
        }
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    /// Unordered pairs without kernel mass at `t`.
    pub fn unsupported_pairs(&self) -> usize {
        self.unsupported_pairs
    }

    /// Whether every state reaches every other through positive
    /// off-diagonal entries.
    pub fn is_irreducible(&self) -> bool {
        let n = self.n();
        if n <= 1 {
            return true;
        }
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let w = if forward {
                        self.entries[(i, j)]
                    } else {
                        self.entries[(j, i)]
                    };
                    if j != i && w > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// Transition matrix from pairwise kernel masses: `P_ij = fraction_ij / n`,
/// with pairs lacking local evidence left at zero.
pub fn transition_from_mass(mass: &PairwiseMass, t: f64) -> TransitionMatrix {
    let n = mass.mass.rows();
    let scale = 1.0 / n as f64;
    let mut unsupported = 0;
    let mut off = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            match mass.fraction(i, j) {
                Some(f) => off[(i, j)] = scale * f,
                None => {
                    if i < j {
                        unsupported += 1;
                    }
                }
            }
        }
    }
    let mut p = TransitionMatrix::from_off_diagonal(off, t);
    p.unsupported_pairs = unsupported;
    debug_assert!((0..n).any(|i| p.entries[(i, i)] > 0.0));
    p
}

pub fn build_transition<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    t: f64,
) -> TransitionMatrix {
    let view = data.into();
    transition_from_mass(&view.pairwise_mass(spec, t), t)
}

/// Transition matrix of the comparison walk under exact abilities:
/// `P_ij = π_j / (π_i + π_j) / n`.
pub fn ideal_transition(scores: &[f64], t: f64) -> Result<TransitionMatrix> {
    if scores.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::invalid("ideal transition needs strictly positive scores"));
    }
    let n = scores.len();
    let off = Matrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            scores[j] / (scores[i] + scores[j]) / n as f64
        }
    });
    Ok(TransitionMatrix::from_off_diagonal(off, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StationaryMethod {
    PowerIteration,
    LinearSolve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub distribution: Vec<f64>,
    /// `‖vᵀP - vᵀ‖₂`
    pub residual: f64,
    pub iterations: usize,
    pub method: StationaryMethod,
    /// `false` when the chain is reducible and the distribution is not
    /// unique.
    pub irreducible: bool,
}

pub const STATIONARY_TOL: f64 = 1e-10;
pub const STATIONARY_MAX_ITER: usize = 100_000;

fn stationary_residual(p: &Matrix, v: &[f64]) -> f64 {
    let vp = p.vec_mul(v);
    let d: Vec<f64> = vp.iter().zip(v).map(|(a, b)| a - b).collect();
    norm2(&d)
}

/// Stationary distribution by power iteration `vᵀ <- vᵀP` from the uniform
/// vector, with a dense linear solve as fallback when the iteration stalls.
pub fn stationary_distribution(
    p: &TransitionMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<Stationary> {
    let n = p.n();
    let irreducible = p.is_irreducible();
    let m = &p.entries;
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut last_check = f64::INFINITY;
    while iterations < max_iter {
        let mut next = m.vec_mul(&v);
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        v = next;
        iterations += 1;
        if iterations % 8 == 0 || iterations < 8 {
            residual = stationary_residual(m, &v);
            if residual <= tol {
                return Ok(Stationary {
                    distribution: v,
                    residual,
                    iterations,
                    method: StationaryMethod::PowerIteration,
                    irreducible,
                });
            }
            // stalled: no meaningful progress over the last block
            if iterations % 1024 == 0 {
                if residual > 0.999 * last_check {
                    break;
                }
                last_check = residual;
            }
        }
    }
    if let Some(sol) = solve_stationary(m) {
        let r = stationary_residual(m, &sol);
        if r <= tol && sol.iter().all(|&x| x >= -tol) {
            let mut sol: Vec<f64> = sol.into_iter().map(|x| x.max(0.0)).collect();
            let s: f64 = sol.iter().sum();
            sol.iter_mut().for_each(|x| *x /= s);
            return Ok(Stationary {
                residual: stationary_residual(m, &sol),
                distribution: sol,
                iterations,
                method: StationaryMethod::LinearSolve,
                irreducible,
            });
        }
    }
    Err(Error::convergence("stationary distribution", iterations, residual).at_time(p.t))
}

/// Solves `(Pᵀ - I) v = 0` with the last equation replaced by `Σ v = 1`.
fn solve_stationary(p: &Matrix) -> Option<Vec<f64>> {
    let n = p.rows();
    let mut a = Matrix::from_fn(n, n, |i, j| p[(j, i)] - if i == j { 1.0 } else { 0.0 });
    let mut b = vec![0.0; n];
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    b[n - 1] = 1.0;
    linalg::solve(&a, &b)
}

/// Non-fatal conditions met while estimating a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorWarning {
    /// The comparison walk at `t` is reducible; scores are not unique.
    Reducible { t: f64 },
    /// Pairs with no kernel mass at `t`.
    SparsePairs { t: f64, pairs: usize },
}

#[derive(Debug, Clone)]
pub struct KrcEstimate {
    pub trajectory: ScoreTrajectory,
    pub warnings: Vec<EstimatorWarning>,
}

/// Kernel rank centrality over a time grid.
pub fn krc_estimate<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    grid: &TimeGrid,
) -> Result<KrcEstimate> {
    let view = data.into();
    let n = view.n_items();
    let mut scores = Matrix::zeros(grid.len(), n);
    let mut warnings = Vec::new();
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
        scores.row_mut(k).copy_from_slice(&st.distribution);
    }
    Ok(KrcEstimate {
        trajectory: ScoreTrajectory::new(grid.clone(), scores)?,
        warnings,
    })
}
