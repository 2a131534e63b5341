//! Small dense linear algebra: row-major matrices, Cholesky with jitter
//! escalation and rank-one extension, and pivoted LU for the few
//! non-symmetric solves the Laplace predictive needs.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data. `data.len()` must equal `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch { expected: cols, found: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    /// An empty matrix with `cols` columns, ready for [`Matrix::push_row`].
    pub fn with_cols(cols: usize) -> Self {
        Matrix { rows: 0, cols, data: Vec::new() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        // chunks_exact(0) panics
        let width = self.cols.max(1);
        self.data.chunks_exact(width).take(self.rows)
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.cols {
            return Err(Error::DimensionMismatch { expected: self.cols, found: row.len() });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Keeps the rows whose flag is `true`.
    pub fn select_rows(&self, keep: &[bool]) -> Matrix {
        let mut out = Matrix::with_cols(self.cols);
        for (r, &k) in self.row_iter().zip(keep) {
            if k {
                out.data.extend_from_slice(r);
                out.rows += 1;
            }
        }
        out
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        self.row_iter().map(|r| dot(r, v)).collect()
    }

    /// `out = self · v` without allocating.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.cols);
        for (o, r) in out.iter_mut().zip(self.row_iter()) {
            *o = dot(r, v);
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn add_diagonal(&mut self, value: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += value;
        }
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

/// Inner product, summed in four interleaved lanes so it vectorizes.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[2]) + (acc[1] + acc[3]) + tail
}

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Factorizes a symmetric matrix. Returns `None` when a pivot is not
    /// strictly positive (the matrix is not numerically positive definite).
    pub fn new(a: &Matrix) -> Option<Self> {
        Self::from_matrix(a.clone())
    }

    /// As [`Cholesky::new`], reusing the storage of `a`. Only the lower
    /// triangle of `a` is read.
    pub fn from_matrix(mut a: Matrix) -> Option<Self> {
        let n = a.rows();
        debug_assert_eq!(n, a.cols());
        let data = &mut a.data;
        for j in 0..n {
            let row_j = &mut data[j * n..(j + 1) * n];
            let d = row_j[j] - dot(&row_j[..j], &row_j[..j]);
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let d = libm::sqrt(d);
            row_j[j] = d;
            row_j[j + 1..].iter_mut().for_each(|v| *v = 0.0);
            let (upto, below) = data.split_at_mut((j + 1) * n);
            let lj = &upto[j * n..j * n + j];
            for row_i in below.chunks_exact_mut(n) {
                row_i[j] = (row_i[j] - dot(&row_i[..j], lj)) / d;
            }
        }
        Some(Cholesky { l: a })
    }

    /// Factorizes `a`, adding extra diagonal jitter whenever a pivot fails.
    ///
    /// The first attempt uses `a` unchanged; subsequent attempts add
    /// `start`, `10·start`, ... up to `max`. Returns the factor and the extra
    /// jitter that was added (0 when none was needed).
    pub fn with_jitter(a: &Matrix, start: f64, max: f64) -> Result<(Self, f64)> {
        if let Some(c) = Cholesky::new(a) {
            return Ok((c, 0.0));
        }
        let mut extra = start;
        while extra <= max * (1.0 + 1e-12) {
            let mut b = a.clone();
            b.add_diagonal(extra);
            if let Some(c) = Cholesky::new(&b) {
                return Ok((c, extra));
            }
            extra *= 10.0;
        }
        Err(Error::NumericalFailure("Cholesky factorization failed after jitter escalation"))
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn into_factor(self) -> Matrix {
        self.l
    }

    /// Solves `L z = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let mut z = b.to_vec();
        self.solve_lower_in_place(&mut z);
        z
    }

    pub fn solve_lower_in_place(&self, z: &mut [f64]) {
        for i in 0..self.dim() {
            let row = self.l.row(i);
            let s = dot(&row[..i], &z[..i]);
            z[i] = (z[i] - s) / row[i];
        }
    }

    /// Solves `Lᵀ x = z`.
    pub fn solve_upper(&self, z: &[f64]) -> Vec<f64> {
        let mut x = z.to_vec();
        self.solve_upper_in_place(&mut x);
        x
    }

    pub fn solve_upper_in_place(&self, x: &mut [f64]) {
        for i in (0..self.dim()).rev() {
            let row = self.l.row(i);
            x[i] /= row[i];
            let xi = x[i];
            for (xk, lik) in x[..i].iter_mut().zip(&row[..i]) {
                *xk -= lik * xi;
            }
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        self.solve_lower_in_place(b);
        self.solve_upper_in_place(b);
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| libm::log(self.l[(i, i)])).sum::<f64>()
    }

    /// Extends the factor of `A` to the factor of `[[A, c], [cᵀ, d]]`.
    ///
    /// Returns `false` (leaving `self` untouched) if the new pivot is not
    /// positive.
    pub fn append(&mut self, cross: &[f64], diag: f64) -> bool {
        let n = self.dim();
        debug_assert_eq!(cross.len(), n);
        let l_row = self.solve_lower(cross);
        let pivot_sq = diag - dot(&l_row, &l_row);
        if !(pivot_sq > 0.0) || !pivot_sq.is_finite() {
            return false;
        }
        let mut grown = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            grown.row_mut(i)[..=i].copy_from_slice(&self.l.row(i)[..=i]);
        }
        grown.row_mut(n)[..n].copy_from_slice(&l_row);
        grown[(n, n)] = libm::sqrt(pivot_sq);
        self.l = grown;
        true
    }
}

/// Solves the square system `A X = B` column by column with partially
/// pivoted LU. Returns `None` for a numerically singular `A`.
pub fn lu_solve_many(a: &Matrix, b: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    debug_assert_eq!(n, a.cols());
    debug_assert_eq!(n, b.rows());
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    for k in 0..n {
        let (mut p, mut best) = (k, lu[(k, k)].abs());
        for i in k + 1..n {
            if lu[(i, k)].abs() > best {
                best = lu[(i, k)].abs();
                p = i;
            }
        }
        if best <= scale * 1e-14 {
            return None;
        }
        if p != k {
            for j in 0..n {
                let t = lu[(k, j)];
                lu[(k, j)] = lu[(p, j)];
                lu[(p, j)] = t;
            }
            for j in 0..x.cols() {
                let t = x[(k, j)];
                x[(k, j)] = x[(p, j)];
                x[(p, j)] = t;
            }
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let m = lu[(i, k)] / pivot;
            if m == 0.0 {
                continue;
            }
            lu[(i, k)] = m;
            for j in k + 1..n {
                lu[(i, j)] -= m * lu[(k, j)];
            }
            for j in 0..x.cols() {
                x[(i, j)] -= m * x[(k, j)];
            }
        }
    }
    for c in 0..x.cols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for j in i + 1..n {
                s -= lu[(i, j)] * x[(j, c)];
            }
            x[(i, c)] = s / lu[(i, i)];
        }
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spd3() -> Matrix {
        Matrix::from_rows(&[[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]]).unwrap()
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = spd3();
        let c = Cholesky::new(&a).unwrap();
        let l = c.factor();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| l[(i, k)] * l[(j, k)]).sum();
                assert!((s - a[(i, j)]).abs() < 1e-12);
            }
        }
        let x = c.solve(&[1.0, 2.0, 3.0]);
        let back = a.mul_vec(&x);
        for (b, e) in back.iter().zip([1.0, 2.0, 3.0]) {
            assert!((b - e).abs() < 1e-12);
        }
    }

    #[test]
    fn append_matches_full_factorization() {
        let a = spd3();
        let top = Matrix::from_rows(&[[4.0, 2.0], [2.0, 5.0]]).unwrap();
        let mut c = Cholesky::new(&top).unwrap();
        assert!(c.append(&[0.6, 1.0], 3.0));
        let full = Cholesky::new(&a).unwrap();
        for (x, y) in c.factor().as_slice().iter().zip(full.factor().as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_needs_jitter() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(Cholesky::new(&a).is_none());
        let (_, extra) = Cholesky::with_jitter(&a, 1e-8, 1e-4).unwrap();
        assert!(extra > 0.0 && extra <= 1e-4);
        let neg = Matrix::from_rows(&[[-1.0]]).unwrap();
        assert!(Cholesky::with_jitter(&neg, 1e-8, 1e-4).is_err());
    }

    #[test]
    fn lu_solves_nonsymmetric() {
        let a = Matrix::from_rows(&[[0.0, 2.0, 1.0], [1.0, 1.0, 0.0], [3.0, 0.0, 1.0]]).unwrap();
        let b = Matrix::identity(3);
        let inv = lu_solve_many(&a, &b).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[(i, k)] * inv[(k, j)]).sum();
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s - e).abs() < 1e-12);
            }
        }
        let sing = Matrix::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        assert!(lu_solve_many(&sing, &Matrix::identity(2)).is_none());
    }
}
