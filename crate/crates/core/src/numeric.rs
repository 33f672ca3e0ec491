//! Dense/sparse linear-algebra kernels and the Adam optimizer.
//!
//! Everything is 64-bit. The kernels are deliberately small: the graphs this
//! crate works with fit comfortably in memory and the gradient checks need
//! f64 headroom, so there is no BLAS and no autodiff.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compressed sparse row matrix with f64 values.
///
/// Row offsets are monotone and column indices are sorted within each row,
/// which keeps accumulation order fixed and results bitwise-deterministic
/// regardless of thread count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    pub rows: usize,
    pub cols: usize,
    pub row_offsets: Vec<usize>,
    pub col_indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != rows + 1
            || col_indices.len() != values.len()
            || row_offsets.last().copied().unwrap_or(0) != col_indices.len()
        {
            return Err(Error::InvalidCache("inconsistent CSR arrays".into()));
        }
        for w in row_offsets.windows(2) {
            if w[0] > w[1] {
                return Err(Error::InvalidCache("row offsets not monotone".into()));
            }
        }
        for r in 0..rows {
            let row = &col_indices[row_offsets[r]..row_offsets[r + 1]];
            for w in row.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::InvalidCache("column indices not sorted".into()));
                }
            }
            if row.last().is_some_and(|&c| c >= cols) {
                return Err(Error::InvalidCache("column index out of bounds".into()));
            }
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Builds a CSR matrix from (row, col, value) triplets sorted by (row, col).
    /// Duplicate coordinates are rejected.
    pub fn from_sorted_triplets(
        rows: usize,
        cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut row_offsets = vec![0usize; rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut prev: Option<(usize, usize)> = None;
        for &(r, c, v) in triplets {
            if let Some(p) = prev {
                if (r, c) <= p {
                    return Err(Error::InvalidCache(
                        "triplets not strictly sorted by (row, col)".into(),
                    ));
                }
            }
            prev = Some((r, c));
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
        }
        for r in 0..rows {
            row_offsets[r + 1] += row_offsets[r];
        }
        Self::new(rows, cols, row_offsets, col_indices, values)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    /// Entries of one row as (column, value) pairs, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_offsets[r];
        let hi = self.row_offsets[r + 1];
        self.col_indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for c in 0..self.cols {
            counts[c + 1] += counts[c];
        }
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = counts.clone();
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                let slot = next[c];
                col_indices[slot] = r;
                values[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            row_offsets: counts,
            col_indices,
            values,
        }
    }

    /// Sparse-dense product `self * b`.
    ///
    /// Parallel across output rows; per-row accumulation follows CSR order, so
    /// the result does not depend on the number of threads.
    pub fn spmm(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != b.rows {
            return Err(Error::ShapeMismatch {
                context: "spmm",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", b.rows, b.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols);
        let width = b.cols;
        out.data
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(r, out_row)| {
                for (c, v) in self.row(r) {
                    let b_row = &b.data[c * width..(c + 1) * width];
                    for (o, &x) in out_row.iter_mut().zip(b_row) {
                        *o += v * x;
                    }
                }
            });
        Ok(out)
    }

    /// Like [`spmm`](Self::spmm) but only columns `< col_limit` of `self`
    /// participate, with `b` indexed by that restricted column space.
    pub fn spmm_col_prefix(&self, col_limit: usize, b: &DenseMatrix) -> Result<DenseMatrix> {
        if col_limit != b.rows || col_limit > self.cols {
            return Err(Error::ShapeMismatch {
                context: "spmm_col_prefix",
                left: format!("{}x{} (limit {})", self.rows, self.cols, col_limit),
                right: format!("{}x{}", b.rows, b.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, b.cols);
        let width = b.cols;
        out.data
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(r, out_row)| {
                for (c, v) in self.row(r) {
                    if c >= col_limit {
                        break; // columns are sorted
                    }
                    let b_row = &b.data[c * width..(c + 1) * width];
                    for (o, &x) in out_row.iter_mut().zip(b_row) {
                        *o += v * x;
                    }
                }
            });
        Ok(out)
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "dense shape mismatch");
        Self { rows, cols, data }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Dense product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::ShapeMismatch {
                context: "matmul",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        let width = other.cols;
        out.data
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(r, out_row)| {
                for k in 0..self.cols {
                    let a = self.get(r, k);
                    if a == 0.0 {
                        continue;
                    }
                    let b_row = &other.data[k * width..(k + 1) * width];
                    for (o, &x) in out_row.iter_mut().zip(b_row) {
                        *o += a * x;
                    }
                }
            });
        Ok(out)
    }

    /// Dense product `self^T * other` without materializing the transpose.
    pub fn matmul_tn(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::ShapeMismatch {
                context: "matmul_tn",
                left: format!("{}x{}", self.rows, self.cols),
                right: format!("{}x{}", other.rows, other.cols),
            });
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.data[k * other.cols..(k + 1) * other.cols];
                let b_row = &other.data[r * other.cols..(r + 1) * other.cols];
                for (o, &x) in out_row.iter_mut().zip(b_row) {
                    *o += a * x;
                }
            }
        }
        Ok(out)
    }

    /// In-place ReLU, returning the pre-activation mask needed by backprop.
    pub fn relu_in_place(&mut self) -> Vec<bool> {
        let mut mask = vec![false; self.data.len()];
        for (v, m) in self.data.iter_mut().zip(mask.iter_mut()) {
            if *v > 0.0 {
                *m = true;
            } else {
                *v = 0.0;
            }
        }
        mask
    }

    /// Row-wise softmax with max-subtraction for stability.
    pub fn softmax_rows(&self) -> DenseMatrix {
        let mut out = self.clone();
        for r in 0..out.rows {
            let row = out.row_mut(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        out
    }
}

/// Adam state for one parameter matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub label: String,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(label: impl Into<String>, lr: f64, len: usize) -> Self {
        Self {
            label: label.into(),
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One bias-corrected Adam update of `param` in place.
pub fn adam_step(param: &mut DenseMatrix, grad: &DenseMatrix, state: &mut AdamState) -> Result<()> {
    if param.rows != grad.rows || param.cols != grad.cols || param.data.len() != state.m.len() {
        return Err(Error::ShapeMismatch {
            context: "adam_step",
            left: format!("{}x{}", param.rows, param.cols),
            right: format!("{}x{}", grad.rows, grad.cols),
        });
    }
    if !grad.is_finite() {
        return Err(Error::NonFiniteGradient {
            param: state.label.clone(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - state.beta1.powi(t);
    let bc2 = 1.0 - state.beta2.powi(t);
    for i in 0..param.data.len() {
        let g = grad.data[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        param.data[i] -= state.lr * m_hat / (v_hat.sqrt() + state.epsilon);
    }
    Ok(())
}
