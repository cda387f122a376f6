// SPDX-License-Identifier: MIT OR Apache-2.0

//! Small dense row-major matrices.
//!
//! Every matrix in this crate is at most a few hundred rows, so plain
//! `Vec<f64>` storage with partial-pivoting LU is all that is needed.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

#[cfg(not(feature = "std"))]
use num_traits::Float;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds a matrix from row-major data.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data has the wrong length");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| dot(self.row(i), x))
            .collect()
    }

    /// `xᵀ A`
    pub fn vec_mul(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, x.len());
        let mut out = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += xi * a;
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// LU factorization with partial pivoting.
pub struct Lu {
    lu: Matrix,
    piv: Vec<usize>,
}

impl Lu {
    /// Returns `None` when a pivot falls below `tol` times the largest
    /// entry of the input.
    pub fn new(a: &Matrix, tol: f64) -> Option<Lu> {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= tol * scale {
                return None;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu.data[i * n + j] -= f * lu.data[k * n + j];
                    }
                }
            }
        }
        Some(Lu { lu, piv })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        x
    }
}

const SINGULAR_TOL: f64 = 1e-13;

pub fn solve(a: &Matrix, b: &[f64]) -> Option<Vec<f64>> {
    Lu::new(a, SINGULAR_TOL).map(|lu| lu.solve(b))
}

pub fn inverse(a: &Matrix) -> Option<Matrix> {
    let n = a.rows;
    let lu = Lu::new(a, SINGULAR_TOL)?;
    let mut inv = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
    }
    Some(inv)
}

/// Full-rank factorization `A = C F` from the reduced row echelon form.
///
/// `C` holds the pivot columns of `A` (n x r) and `F` the nonzero rows of
/// the echelon form (r x n). Entries below `tol * max|A|` count as zero.
pub fn rank_factorization(a: &Matrix, tol: f64) -> (Matrix, Matrix) {
    let (rows, cols) = (a.rows, a.cols);
    let mut r = a.clone();
    let thresh = tol * a.max_abs().max(f64::MIN_POSITIVE);
    let mut pivots = Vec::new();
    let mut lead = 0;
    for c in 0..cols {
        if lead == rows {
            break;
        }
        let (p, best) = (lead..rows)
            .map(|i| (i, r[(i, c)].abs()))
            .fold((lead, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= thresh {
            for i in lead..rows {
                r[(i, c)] = 0.0;
            }
            continue;
        }
        if p != lead {
            for j in 0..cols {
                r.data.swap(lead * cols + j, p * cols + j);
            }
        }
        let pv = r[(lead, c)];
        for j in 0..cols {
            r[(lead, j)] /= pv;
        }
        for i in 0..rows {
            if i != lead {
                let f = r[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        r.data[i * cols + j] -= f * r.data[lead * cols + j];
                    }
                }
            }
        }
        pivots.push(c);
        lead += 1;
    }
    let rank = pivots.len();
    let c_mat = Matrix::from_fn(rows, rank, |i, k| a[(i, pivots[k])]);
    let f_mat = Matrix::from_fn(rank, cols, |k, j| r[(k, j)]);
    (c_mat, f_mat)
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration. Returns 0 for the zero matrix.
pub fn spd_max_eigenvalue(a: &Matrix, max_iter: usize, rel_tol: f64) -> f64 {
    let n = a.rows;
    if n == 0 {
        return 0.0;
    }
    // deterministic start with no special symmetry
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i as f64) * 0.37 % 1.0).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w = a.mul_vec(&v);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        let next = dot(&v, &w);
        v = w.into_iter().map(|x| x / nw).collect();
        if (next - lambda).abs() <= rel_tol * next.abs() {
            return next.max(nw);
        }
        lambda = next;
    }
    lambda
}
