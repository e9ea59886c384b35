//! Dense vector/matrix primitives and order statistics.
//!
//! Vectors are plain `&[f64]` slices. Matrices are column-major [`DenseMatrix`]
//! values, so a column (one example, one class weight vector) is a contiguous
//! slice.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Column-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Wraps column-major `data`. Fails if the length does not match or an
    /// entry is not finite.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows.checked_mul(cols) != Some(data.len()) {
            return Err(Error::invalid(format!(
                "matrix {rows}x{cols} needs {} values, got {}",
                rows.saturating_mul(cols),
                data.len()
            )));
        }
        ensure_finite(&data, "matrix")?;
        Ok(DenseMatrix { rows, cols, data })
    }

    /// Builds a matrix from equally sized columns.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::invalid(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Self::from_col_major(rows, columns.len(), data)
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
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[col * self.rows + row] = value;
    }

    #[inline]
    pub fn col(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `selfᵀ · x`, one dot product per column.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        (0..self.cols).map(|j| dot(self.col(j), x)).collect()
    }

    /// `selfᵀ · other` as a `cols × other.cols` matrix.
    pub fn tr_mul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.rows != other.rows {
            return Err(Error::invalid(format!(
                "inner dimensions differ: {} vs {}",
                self.rows, other.rows
            )));
        }
        let mut out = DenseMatrix::zeros(self.cols, other.cols);
        for j in 0..other.cols {
            let x = other.col(j);
            for (i, o) in out.col_mut(j).iter_mut().enumerate() {
                *o = dot(self.col(i), x);
            }
        }
        Ok(out)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn ensure_finite(v: &[f64], what: &str) -> Result<()> {
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::invalid(format!(
            "{what} has a non-finite entry at index {i}"
        ))),
        None => Ok(()),
    }
}

fn check_k(len: usize, k: usize) -> Result<()> {
    if k == 0 || k > len {
        return Err(Error::invalid(format!(
            "k = {k} out of range for a vector of length {len}"
        )));
    }
    Ok(())
}

#[inline]
fn desc(a: &f64, b: &f64) -> Ordering {
    b.total_cmp(a)
}

/// Sum of the `k` largest entries of `v`.
pub fn sum_top_k(v: &[f64], k: usize) -> Result<f64> {
    check_k(v.len(), k)?;
    if k == v.len() {
        return Ok(v.iter().sum());
    }
    let mut buf = v.to_vec();
    buf.select_nth_unstable_by(k - 1, desc);
    Ok(buf[..k].iter().sum())
}

/// The `count` largest entries of `v` in descending order, in `O(d + count·log count)`.
pub fn top_sorted(v: &[f64], count: usize) -> Vec<f64> {
    let count = count.min(v.len());
    if count == 0 {
        return Vec::new();
    }
    let mut buf = v.to_vec();
    if count < buf.len() {
        buf.select_nth_unstable_by(count - 1, desc);
        buf.truncate(count);
    }
    buf.sort_unstable_by(desc);
    buf
}

/// The `k`-th largest entry of `v` (1-based `k`). Ties are resolved by value.
pub fn kth_largest(v: &[f64], k: usize) -> Result<f64> {
    check_k(v.len(), k)?;
    let mut buf = v.to_vec();
    let (_, kth, _) = buf.select_nth_unstable_by(k - 1, desc);
    Ok(*kth)
}

/// Stable descending sort. Returns `(perm, sorted)` with `sorted[j] = v[perm[j]]`;
/// equal values keep ascending original index order.
pub fn sorted_desc_with_index(v: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut perm: Vec<usize> = (0..v.len()).collect();
    perm.sort_by(|&i, &j| desc(&v[i], &v[j]));
    let sorted = perm.iter().map(|&i| v[i]).collect();
    (perm, sorted)
}

/// `w ← w + x·deltaᵀ` for `w` of shape `len(x) × len(delta)`.
pub fn rank1_update(w: &mut DenseMatrix, x: &[f64], delta: &[f64]) -> Result<()> {
    if w.rows() != x.len() || w.cols() != delta.len() {
        return Err(Error::invalid(format!(
            "rank-1 update of a {}x{} matrix with vectors of length {} and {}",
            w.rows(),
            w.cols(),
            x.len(),
            delta.len()
        )));
    }
    for (j, &dj) in delta.iter().enumerate() {
        if dj == 0.0 {
            continue;
        }
        for (wij, &xi) in w.col_mut(j).iter_mut().zip(x) {
            *wij += xi * dj;
        }
    }
    Ok(())
}
