//! Products of a weight matrix with a binary vector given by its support.
//!
//! With `y ∈ {0,1}^n`, `Wᵀy` is the sum of the rows of `W` selected by the
//! active indices, so the dense binary vector is never built.

use crate::error::{Error, Result};

use super::{Matrix, Vector};

const ABSENT: u32 = u32::MAX;

pub fn validate_indices(indices: &[u32], bound: usize) -> Result<()> {
    for (pos, &idx) in indices.iter().enumerate() {
        if idx as usize >= bound {
            return Err(Error::IndexOutOfRange {
                index: idx as usize,
                bound,
            });
        }
        if pos > 0 && indices[pos - 1] >= idx {
            return Err(Error::UnsortedIndices { position: pos });
        }
    }
    Ok(())
}

/// `Σ_{j ∈ active} weight[j, :]`.
pub fn sparse_project_forward(weight: &Matrix, active: &[u32]) -> Result<Vector> {
    validate_indices(active, weight.rows())?;
    let mut out = Vector::zeros(weight.cols());
    for &j in active {
        for (o, w) in out.iter_mut().zip(weight.row(j as usize)) {
            *o += w;
        }
    }
    Ok(out)
}

/// Gradient of [`sparse_project_forward`] with respect to the weight: the
/// upstream gradient copied into each active row; all other rows are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGrad {
    pub rows: Vec<usize>,
    pub values: Matrix,
}

pub fn sparse_project_backward(
    grad_output: &[f64],
    active: &[u32],
    weight_rows: usize,
) -> Result<SparseGrad> {
    validate_indices(active, weight_rows)?;
    let cols = grad_output.len();
    let mut values = Matrix::zeros(active.len(), cols);
    for r in 0..active.len() {
        values.row_mut(r).copy_from_slice(grad_output);
    }
    Ok(SparseGrad {
        rows: active.iter().map(|&j| j as usize).collect(),
        values,
    })
}

/// Batch gather: row `b` of `out` becomes the sum of `weight` rows listed in
/// `supports[b]`. Indices must already be validated. Consecutive identical
/// supports are computed once.
pub fn gather_rows_sum(weight: &Matrix, supports: &[&[u32]], out: &mut Matrix) {
    assert_eq!(out.shape(), (supports.len(), weight.cols()));
    let cols = weight.cols();
    for (b, support) in supports.iter().enumerate() {
        if b > 0 && std::ptr::eq(*support, supports[b - 1]) {
            let (prev, cur) = out.as_mut_slice().split_at_mut(b * cols);
            cur[..cols].copy_from_slice(&prev[(b - 1) * cols..]);
            continue;
        }
        let row = out.row_mut(b);
        row.iter_mut().for_each(|v| *v = 0.0);
        for &j in support.iter() {
            debug_assert!((j as usize) < weight.rows());
            for (o, w) in row.iter_mut().zip(weight.row(j as usize)) {
                *o += w;
            }
        }
    }
}

/// Adjoint of [`gather_rows_sum`]: adds row `b` of `grad` into every row of
/// the accumulator listed in `supports[b]`.
pub fn scatter_rows_add(grad: &Matrix, supports: &[&[u32]], acc: &mut SparseRowGrad) {
    assert_eq!(grad.rows(), supports.len());
    assert_eq!(grad.cols(), acc.cols());
    for (b, support) in supports.iter().enumerate() {
        let g = grad.row(b);
        for &j in support.iter() {
            for (a, v) in acc.row_entry(j as usize).iter_mut().zip(g) {
                *a += v;
            }
        }
    }
}

/// Row-sparse gradient accumulator for a `rows × cols` parameter.
///
/// Rows are stored in first-touch order; `slot` maps a parameter row to its
/// position in `data`.
#[derive(Debug, Clone)]
pub struct SparseRowGrad {
    cols: usize,
    slot: Vec<u32>,
    touched: Vec<u32>,
    data: Vec<f64>,
}

impl SparseRowGrad {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows < ABSENT as usize);
        Self {
            cols,
            slot: vec![ABSENT; rows],
            touched: Vec::new(),
            data: Vec::new(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.slot.len()
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of rows holding a (possibly zero) gradient.
    pub fn nnz_rows(&self) -> usize {
        self.touched.len()
    }

    /// Mutable gradient row, zero-initialized on first access.
    pub fn row_entry(&mut self, row: usize) -> &mut [f64] {
        let mut s = self.slot[row];
        if s == ABSENT {
            s = self.touched.len() as u32;
            self.slot[row] = s;
            self.touched.push(row as u32);
            self.data.resize(self.data.len() + self.cols, 0.0);
        }
        let start = s as usize * self.cols;
        &mut self.data[start..start + self.cols]
    }

    #[inline]
    pub fn get(&self, row: usize) -> Option<&[f64]> {
        let s = self.slot[row];
        (s != ABSENT).then(|| {
            let start = s as usize * self.cols;
            &self.data[start..start + self.cols]
        })
    }

    /// `(row, gradient)` pairs in first-touch order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &[f64])> {
        self.touched
            .iter()
            .zip(self.data.chunks_exact(self.cols.max(1)))
            .map(|(&r, g)| (r as usize, g))
    }

    pub fn clear(&mut self) {
        for &r in &self.touched {
            self.slot[r as usize] = ABSENT;
        }
        self.touched.clear();
        self.data.clear();
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }

    pub fn add_assign(&mut self, other: &SparseRowGrad) {
        assert_eq!((self.rows(), self.cols), (other.rows(), other.cols));
        for (r, g) in other.iter() {
            for (a, v) in self.row_entry(r).iter_mut().zip(g) {
                *a += v;
            }
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows(), self.cols);
        for (r, g) in self.iter() {
            m.row_mut(r).copy_from_slice(g);
        }
        m
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl From<SparseGrad> for SparseRowGrad {
    fn from(g: SparseGrad) -> Self {
        let rows = g.rows.iter().copied().max().map_or(0, |m| m + 1);
        let mut acc = SparseRowGrad::new(rows, g.values.cols());
        for (k, &r) in g.rows.iter().enumerate() {
            acc.row_entry(r).copy_from_slice(g.values.row(k));
        }
        acc
    }
}
