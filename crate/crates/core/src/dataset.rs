//! Observations with an inlier mask. Points are never removed; exclusion
//! happens only through the mask.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
    inlier_mask: Vec<bool>,
}

impl Dataset {
    /// All points start as inliers.
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::DimensionMismatch { expected: x.rows(), found: y.len() });
        }
        let n = y.len();
        Ok(Dataset { x, y, inlier_mask: vec![true; n] })
    }

    pub fn empty(dim: usize) -> Self {
        Dataset { x: Matrix::with_cols(dim), y: Vec::new(), inlier_mask: Vec::new() }
    }

    pub fn from_points<R: AsRef<[f64]>>(xs: &[R], y: &[f64]) -> Result<Self> {
        Dataset::new(Matrix::from_rows(xs)?, y.to_vec())
    }

    pub fn push(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.x.push_row(x)?;
        self.y.push(y);
        self.inlier_mask.push(true);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn mask(&self) -> &[bool] {
        &self.inlier_mask
    }

    pub fn set_mask(&mut self, mask: &[bool]) -> Result<()> {
        if mask.len() != self.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: mask.len() });
        }
        self.inlier_mask.copy_from_slice(mask);
        Ok(())
    }

    pub fn clear_mask(&mut self) {
        self.inlier_mask.iter_mut().for_each(|m| *m = true);
    }

    pub fn inlier_count(&self) -> usize {
        self.inlier_mask.iter().filter(|m| **m).count()
    }

    /// The masked view: only inlier rows, all marked inlier.
    pub fn inliers(&self) -> Dataset {
        let x = self.x.select_rows(&self.inlier_mask);
        let y: Vec<f64> = self.y.iter().zip(&self.inlier_mask).filter(|(_, m)| **m).map(|(v, _)| *v).collect();
        let n = y.len();
        Dataset { x, y, inlier_mask: vec![true; n] }
    }

    /// Smallest inlier target and its location.
    pub fn best_inlier(&self) -> Option<(usize, f64)> {
        self.y
            .iter()
            .zip(&self.inlier_mask)
            .enumerate()
            .filter(|(_, (_, m))| **m)
            .map(|(i, (v, _))| (i, *v))
            .fold(None, |best: Option<(usize, f64)>, (i, v)| match best {
                Some((_, b)) if b <= v => best,
                _ => Some((i, v)),
            })
    }

    /// Per-dimension span of the inputs (`max - min`), 1 where degenerate.
    pub fn input_span(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| {
                let (lo, hi) = self
                    .x
                    .row_iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
                let span = hi - lo;
                if span > 0.0 && span.is_finite() { span } else { 1.0 }
            })
            .collect()
    }
}
