//! Stationary covariance functions with ARD lengthscales.
//!
//! Both families are functions of the scaled distance
//! `r = sqrt(Σ_j ((x_j - x'_j) / ℓ_j)²)` and carry a multiplicative signal
//! variance `σ_s²`:
//!
//! * Matérn 5/2: `σ_s² (1 + r + r²/3) e^{-r}`
//! * rational quadratic: `σ_s² (1 + r² / (2α))^{-α}`

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Diagonal jitter added to every Gram matrix, relative to `σ_s²`.
pub const JITTER: f64 = 1e-8;
/// Largest jitter (relative to `σ_s²`) reached by escalation before failing.
pub const MAX_JITTER: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    Matern52,
    RationalQuadratic { alpha: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams {
    lengthscales: Vec<f64>,
    signal_variance: f64,
    family: KernelFamily,
}

impl KernelParams {
    pub fn new(family: KernelFamily, lengthscales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        if lengthscales.is_empty() {
            return Err(Error::InvalidParameter("kernel needs at least one lengthscale"));
        }
        if lengthscales.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter("lengthscales must be positive and finite"));
        }
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(Error::InvalidParameter("signal variance must be positive and finite"));
        }
        if let KernelFamily::RationalQuadratic { alpha } = family {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::InvalidParameter("rational quadratic alpha must be positive"));
            }
        }
        Ok(KernelParams { lengthscales, signal_variance, family })
    }

    pub fn matern52(lengthscales: Vec<f64>, signal_variance: f64) -> Result<Self> {
        Self::new(KernelFamily::Matern52, lengthscales, signal_variance)
    }

    pub fn rational_quadratic(lengthscales: Vec<f64>, signal_variance: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::RationalQuadratic { alpha }, lengthscales, signal_variance)
    }

    /// Isotropic convenience constructor.
    pub fn isotropic(family: KernelFamily, dim: usize, lengthscale: f64, signal_variance: f64) -> Result<Self> {
        Self::new(family, alloc::vec![lengthscale; dim], signal_variance)
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    pub fn lengthscales(&self) -> &[f64] {
        &self.lengthscales
    }

    pub fn signal_variance(&self) -> f64 {
        self.signal_variance
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn with_lengthscales(&self, lengthscales: Vec<f64>) -> Result<Self> {
        Self::new(self.family, lengthscales, self.signal_variance)
    }

    pub fn with_signal_variance(&self, signal_variance: f64) -> Result<Self> {
        Self::new(self.family, self.lengthscales.clone(), signal_variance)
    }

    pub fn jitter(&self) -> f64 {
        JITTER * self.signal_variance
    }

    /// Kernel as a function of the scaled distance `r`.
    #[inline]
    pub fn of_distance(&self, r: f64) -> f64 {
        let shape = match self.family {
            KernelFamily::Matern52 => (1.0 + r + r * r / 3.0) * libm::exp(-r),
            KernelFamily::RationalQuadratic { alpha } => libm::pow(1.0 + r * r / (2.0 * alpha), -alpha),
        };
        self.signal_variance * shape
    }

    #[inline]
    pub(crate) fn distance_unchecked(&self, x: &[f64], x_prime: &[f64]) -> f64 {
        let s: f64 = x
            .iter()
            .zip(x_prime)
            .zip(&self.lengthscales)
            .map(|((a, b), l)| {
                let u = (a - b) / l;
                u * u
            })
            .sum();
        libm::sqrt(s)
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, x: &[f64], x_prime: &[f64]) -> f64 {
        self.of_distance(self.distance_unchecked(x, x_prime))
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: v.len() });
        }
        Ok(())
    }
}

/// ARD distance `‖x - x'‖_Λ`.
pub fn ard_distance(x: &[f64], x_prime: &[f64], params: &KernelParams) -> Result<f64> {
    params.check(x)?;
    params.check(x_prime)?;
    Ok(params.distance_unchecked(x, x_prime))
}

pub fn kernel_value(x: &[f64], x_prime: &[f64], params: &KernelParams) -> Result<f64> {
    params.check(x)?;
    params.check(x_prime)?;
    Ok(params.eval_unchecked(x, x_prime))
}

/// Gram matrix plus `noise_variance + jitter` on the diagonal.
///
/// # Panics
/// If the columns of `x` do not match the kernel dimension.
pub fn gram_matrix(x: &Matrix, params: &KernelParams, noise_variance: f64) -> Matrix {
    assert_eq!(x.cols(), params.dim(), "input dimension does not match kernel");
    let n = x.rows();
    let mut k = Matrix::zeros(n, n);
    let diag = params.signal_variance() + noise_variance + params.jitter();
    for i in 0..n {
        k[(i, i)] = diag;
        let xi = x.row(i);
        for j in 0..i {
            let v = params.eval_unchecked(xi, x.row(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

/// Cross-covariance vector `k(x_q, X)`.
pub fn cross_covariance(x: &Matrix, x_q: &[f64], params: &KernelParams) -> Vec<f64> {
    x.row_iter().map(|r| params.eval_unchecked(r, x_q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Cholesky;
    use alloc::vec;

    #[test]
    fn distance_examples() {
        let p = KernelParams::matern52(vec![1.0, 2.0], 1.0).unwrap();
        assert_eq!(ard_distance(&[0.3, 0.4], &[0.3, 0.4], &p).unwrap(), 0.0);
        assert!((ard_distance(&[0.0, 0.0], &[1.0, 2.0], &p).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let p1 = KernelParams::matern52(vec![1.0], 1.0).unwrap();
        assert_eq!(ard_distance(&[0.0], &[3.0], &p1).unwrap(), 3.0);
        assert!(matches!(ard_distance(&[0.0], &[1.0, 2.0], &p), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn value_examples() {
        let m = KernelParams::matern52(vec![1.0], 1.0).unwrap();
        assert_eq!(kernel_value(&[0.5], &[0.5], &m).unwrap(), 1.0);
        let expected = 7.0 / 3.0 * libm::exp(-1.0);
        assert!((kernel_value(&[0.0], &[1.0], &m).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.858_385_3).abs() < 1e-7);
        let rq = KernelParams::rational_quadratic(vec![1.0], 1.0, 2.0).unwrap();
        assert!((kernel_value(&[0.0], &[2.0], &rq).unwrap() - 0.25).abs() < 1e-15);
        let s = KernelParams::rational_quadratic(vec![1.0], 2.5, 2.0).unwrap();
        assert_eq!(kernel_value(&[1.0], &[1.0], &s).unwrap(), 2.5);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(KernelParams::matern52(vec![0.0], 1.0).is_err());
        assert!(KernelParams::matern52(vec![1.0], -1.0).is_err());
        assert!(KernelParams::matern52(vec![], 1.0).is_err());
        assert!(KernelParams::rational_quadratic(vec![1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn gram_examples() {
        let p = KernelParams::matern52(vec![1.0], 1.0).unwrap();
        let one = Matrix::from_rows(&[[0.2]]).unwrap();
        let k = gram_matrix(&one, &p, 0.0);
        assert_eq!(k[(0, 0)], 1.0 + 1e-8);
        let dup = Matrix::from_rows(&[[0.2], [0.2]]).unwrap();
        let k = gram_matrix(&dup, &p, 0.1);
        assert_eq!(k[(0, 1)], 1.0);
        assert_eq!(k[(1, 0)], 1.0);
        assert_eq!(k[(0, 0)], 1.1 + 1e-8);
        assert!(Cholesky::new(&k).is_some());
    }

    #[test]
    fn matern_decays_monotonically() {
        let p = KernelParams::matern52(vec![1.0], 1.0).unwrap();
        let mut prev = p.of_distance(0.0);
        for i in 1..2000 {
            let v = p.of_distance(i as f64 * 0.01);
            assert!(v < prev);
            prev = v;
        }
    }
}
