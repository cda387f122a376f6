// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-time regression blocks of the fused-lasso problem.

use alloc::vec::Vec;

use crate::kernel::KernelSpec;
use crate::linalg::{dot, Matrix};
use crate::spectral::{build_transition, EstimatorWarning};
use crate::types::{DataView, TimeGrid};
use crate::{Error, Result};

/// Regression blocks `Y(t_k) ≈ X₋₁(t_k) θ(t_k)` on score-sorted items.
///
/// `X₋₁(t) = (Pᵀ(t) - I) Q⁻¹` without its last column and
/// `Y(t) = (I - Pᵀ(t)) e / n`. The block-diagonal stacked design is never
/// formed; the solver works with the per-time Gram matrices.
#[derive(Debug, Clone)]
pub struct FusedDesign {
    grid: TimeGrid,
    perm: Vec<usize>,
    x_blocks: Vec<Matrix>,
    y_blocks: Vec<Vec<f64>>,
    gram: Vec<Matrix>,
    cross: Vec<Vec<f64>>,
    y_sq: Vec<f64>,
}

impl FusedDesign {
    /// Builds the blocks from one transition matrix per grid point, given in
    /// the original item order.
    pub fn from_transitions(grid: TimeGrid, transitions: &[Matrix], perm: Vec<usize>) -> Result<Self> {
        if transitions.len() != grid.len() {
            return Err(Error::ShapeMismatch(alloc::format!(
                "{} transition matrices for a {}-point grid",
                transitions.len(),
                grid.len()
            )));
        }
        let n = perm.len();
        if n < 2 {
            return Err(Error::invalid("grouping needs at least two items"));
        }
        let mut design = FusedDesign {
            grid,
            perm,
            x_blocks: Vec::with_capacity(transitions.len()),
            y_blocks: Vec::with_capacity(transitions.len()),
            gram: Vec::with_capacity(transitions.len()),
            cross: Vec::with_capacity(transitions.len()),
            y_sq: Vec::with_capacity(transitions.len()),
        };
        for p in transitions {
            if p.rows() != n || p.cols() != n {
                return Err(Error::ShapeMismatch(alloc::format!(
                    "transition matrix is {}x{}, expected {n}x{n}",
                    p.rows(),
                    p.cols()
                )));
            }
            let (x, y) = block(p, &design.perm);
            let xt = x.transpose();
            design.gram.push(xt.matmul(&x));
            design.cross.push(xt.mul_vec(&y));
            design.y_sq.push(dot(&y, &y));
            design.x_blocks.push(x);
            design.y_blocks.push(y);
        }
        Ok(design)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn n_items(&self) -> usize {
        self.perm.len()
    }

    /// Number of gap rows, `n - 1`.
    pub fn dim(&self) -> usize {
        self.perm.len() - 1
    }

    pub fn m(&self) -> usize {
        self.grid.len()
    }

    pub fn x_block(&self, k: usize) -> &Matrix {
        &self.x_blocks[k]
    }

    pub fn y_block(&self, k: usize) -> &[f64] {
        &self.y_blocks[k]
    }

    /// `X₋₁ᵀ X₋₁` at grid point `k`.
    pub fn gram(&self, k: usize) -> &Matrix {
        &self.gram[k]
    }

    /// `X₋₁ᵀ Y` at grid point `k`.
    pub fn cross(&self, k: usize) -> &[f64] {
        &self.cross[k]
    }

    pub fn y_norm_sq(&self, k: usize) -> f64 {
        self.y_sq[k]
    }

    /// `‖Y - Xθ‖²` for a `(n - 1) x m` coefficient matrix.
    pub fn rss(&self, theta: &Matrix) -> f64 {
        (0..self.m())
            .map(|k| {
                let col = theta.column(k);
                let g = self.gram[k].mul_vec(&col);
                (dot(&col, &g) - 2.0 * dot(&self.cross[k], &col) + self.y_sq[k]).max(0.0)
            })
            .sum()
    }

    /// Population variance of the stacked response.
    pub fn response_variance(&self) -> f64 {
        let count = (self.m() * self.n_items()) as f64;
        let mean: f64 = self.y_blocks.iter().flatten().sum::<f64>() / count;
        self.y_blocks
            .iter()
            .flatten()
            .map(|y| (y - mean) * (y - mean))
            .sum::<f64>()
            / count
    }
}

/// `X₋₁` and `Y` of one transition matrix on permuted items.
fn block(p: &Matrix, perm: &[usize]) -> (Matrix, Vec<f64>) {
    let n = perm.len();
    let nf = n as f64;
    // A = P'ᵀ - I with P'[a][b] = P[perm[a]][perm[b]]
    let a = Matrix::from_fn(n, n, |r, c| {
        p[(perm[c], perm[r])] - if r == c { 1.0 } else { 0.0 }
    });
    let s: Vec<f64> = (0..n).map(|r| a.row(r).iter().sum()).collect();
    // column c of A Q⁻¹ is Σ_{r <= c} A[:, r] - (c + 1)/n · A e
    let mut x = Matrix::zeros(n, n - 1);
    for r in 0..n {
        let row = a.row(r);
        let mut prefix = 0.0;
        for c in 0..n - 1 {
            prefix += row[c];
            x[(r, c)] = prefix - (c + 1) as f64 / nf * s[r];
        }
    }
    let y = s.iter().map(|v| -v / nf).collect();
    (x, y)
}

/// Assembles the design from kernel-smoothed transition matrices.
pub fn assemble_design<'a>(
    data: impl Into<DataView<'a>>,
    spec: &KernelSpec,
    grid: &TimeGrid,
    perm: Vec<usize>,
) -> Result<(FusedDesign, Vec<EstimatorWarning>)> {
    let view = data.into();
    let mut warnings = Vec::new();
    let transitions: Vec<Matrix> = grid
        .points()
        .iter()
        .map(|&t| {
            let p = build_transition(view, spec, t);
            if p.unsupported_pairs() > 0 {
                warnings.push(EstimatorWarning::SparsePairs {
                    t,
                    pairs: p.unsupported_pairs(),
                });
            }
            p.entries().clone()
        })
        .collect();
    Ok((FusedDesign::from_transitions(grid.clone(), &transitions, perm)?, warnings))
}
