use std::fmt;
use std::ops::{Index, Range};

use crate::{Error, Result};

/// Column-major dense matrix of finite `f64` values.
///
/// Zero-sized shapes are representable (an empty broadcast or an empty file
/// is still a matrix); the factorizations reject them.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps column-major `data`, checking length and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::invalid(format!("shape {rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::invalid(format!(
                "data length {} does not match shape {rows}x{cols}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite entry at ({}, {})",
                pos % rows.max(1),
                pos / rows.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds from row slices; convenient for literals in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged rows"));
        }
        Self::new(m, n, (0..m * n).map(|k| rows[k % m][k / m]).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Rectangular diagonal matrix with `diag` on the leading diagonal.
    pub fn from_diag(rows: usize, cols: usize, diag: &[f64]) -> Result<Self> {
        if diag.len() > rows.min(cols) {
            return Err(Error::invalid("diagonal longer than min(rows, cols)"));
        }
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * rows + i] = d;
        }
        Self::new(rows, cols, m.data)
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Internal constructor for kernel outputs already known to be finite.
    pub(crate) fn from_parts(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Column-major backing storage.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub(crate) fn col_mut(&mut self, j: usize) -> &mut [f64] {
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t.data[i * self.cols + j] = self.data[j * self.rows + i];
            }
        }
        t
    }

    /// Copy of the columns in `range`.
    pub fn columns(&self, range: Range<usize>) -> Self {
        assert!(range.end <= self.cols, "column range out of bounds");
        let data = self.data[range.start * self.rows..range.end * self.rows].to_vec();
        Self::from_parts(self.rows, range.len(), data)
    }

    /// Copy of the rows in `range`.
    pub fn row_block(&self, range: Range<usize>) -> Self {
        assert!(range.end <= self.rows, "row range out of bounds");
        let mut data = Vec::with_capacity(range.len() * self.cols);
        for j in 0..self.cols {
            data.extend_from_slice(&self.col(j)[range.clone()]);
        }
        Self::from_parts(range.len(), self.cols, data)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self::from_parts(
            self.rows,
            self.cols,
            self.data.iter().map(|v| alpha * v).collect(),
        )
    }

    /// `self · diag(d)`, entry by entry.
    pub fn scale_columns(&self, d: &[f64]) -> Result<Self> {
        if d.len() != self.cols {
            return Err(Error::invalid(format!(
                "column scale of length {} for {} columns",
                d.len(),
                self.cols
            )));
        }
        let mut out = self.clone();
        for (j, &s) in d.iter().enumerate() {
            out.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute entry-wise difference; shapes must agree.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub(crate) fn negate_col(&mut self, j: usize) {
        self.col_mut(j).iter_mut().for_each(|v| *v = -*v);
    }

    /// New matrix with columns taken in `order`.
    pub(crate) fn permute_cols(&self, order: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.rows * order.len());
        for &j in order {
            data.extend_from_slice(self.col(j));
        }
        Self::from_parts(self.rows, order.len(), data)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        &self.data[j * self.rows + i]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            let row: Vec<String> = (0..self.cols.min(8))
                .map(|j| format!("{:>12.5e}", self.get(i, j)))
                .collect();
            writeln!(
                f,
                "  {}{}",
                row.join(" "),
                if self.cols > 8 { " ..." } else { "" }
            )?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Inner product with four interleaved partial sums, combined as
/// `(s0 + s1) + (s2 + s3)` plus the tail.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca
        .remainder()
        .iter()
        .zip(cb.remainder())
        .map(|(x, y)| x * y)
        .sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Matrix product `a · b`.
///
/// Each output entry is accumulated over the inner index in ascending
/// order and depends only on one row of `a` and one column of `b`, so
/// slicing either operand before or after the product gives identical bits.
pub fn matmul(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.rows {
        return Err(Error::invalid(format!(
            "matmul: {}x{} times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(matmul_unchecked(a, b))
}

pub(crate) fn matmul_unchecked(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let mut c = DenseMatrix::zeros(a.rows, b.cols);
    for j in 0..b.cols {
        let bj = b.col(j);
        let cj = c.col_mut(j);
        for (k, &bkj) in bj.iter().enumerate() {
            axpy(bkj, a.col(k), cj);
        }
    }
    c
}

/// `aᵀ · b` without forming the transpose.
pub fn matmul_tn(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(Error::invalid(format!(
            "matmul_tn: ({}x{})ᵀ times {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut c = DenseMatrix::zeros(a.cols, b.cols);
    for j in 0..b.cols {
        for i in 0..a.cols {
            c.data[j * a.cols + i] = dot(a.col(i), b.col(j));
        }
    }
    Ok(c)
}

/// `[a | b]`
pub fn concat_cols(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows != b.rows {
        return Err(Error::invalid(format!(
            "concat_cols: {} rows vs {} rows",
            a.rows, b.rows
        )));
    }
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Ok(DenseMatrix::from_parts(a.rows, a.cols + b.cols, data))
}

/// `[a ; b]`
pub fn concat_rows(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.cols != b.cols {
        return Err(Error::invalid(format!(
            "concat_rows: {} cols vs {} cols",
            a.cols, b.cols
        )));
    }
    let rows = a.rows + b.rows;
    let mut data = Vec::with_capacity(rows * a.cols);
    for j in 0..a.cols {
        data.extend_from_slice(a.col(j));
        data.extend_from_slice(b.col(j));
    }
    Ok(DenseMatrix::from_parts(rows, a.cols, data))
}

/// Column-concatenation of a non-empty list, in order.
pub fn hstack(blocks: &[DenseMatrix]) -> Result<DenseMatrix> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::invalid("hstack of nothing"))?;
    let mut data = Vec::new();
    let mut cols = 0;
    for b in blocks {
        if b.rows != first.rows {
            return Err(Error::invalid("hstack: row counts differ"));
        }
        data.extend_from_slice(&b.data);
        cols += b.cols;
    }
    Ok(DenseMatrix::from_parts(first.rows, cols, data))
}

/// Row-concatenation of a non-empty list, in order.
pub fn vstack(blocks: &[DenseMatrix]) -> Result<DenseMatrix> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::invalid("vstack of nothing"))?;
    if blocks.iter().any(|b| b.cols != first.cols) {
        return Err(Error::invalid("vstack: column counts differ"));
    }
    let rows: usize = blocks.iter().map(|b| b.rows).sum();
    let mut data = Vec::with_capacity(rows * first.cols);
    for j in 0..first.cols {
        for b in blocks {
            data.extend_from_slice(b.col(j));
        }
    }
    Ok(DenseMatrix::from_parts(rows, first.cols, data))
}

/// `‖aᵀa − I‖_max`
pub fn orthonormality_defect(a: &DenseMatrix) -> f64 {
    let g = matmul_tn(a, a).expect("same matrix");
    let mut worst: f64 = 0.0;
    for j in 0..g.cols {
        for i in 0..g.rows {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g.get(i, j) - target).abs());
        }
    }
    worst
}
