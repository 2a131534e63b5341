//! Exact GP regression with a Gaussian likelihood and zero prior mean.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{cross_covariance, gram_matrix, KernelParams, MAX_JITTER};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::optimize::{multistart_minimize, Bounds, HyperSearch};
use crate::predictive::Predictive;

pub const LOG_SIGNAL_VARIANCE_RANGE: (f64, f64) = (-6.0, 6.0);
pub const LOG_NOISE_VARIANCE_RANGE: (f64, f64) = (-12.0, 2.0);
/// Lengthscale search range, as multiples of the input span per dimension.
pub const LENGTHSCALE_SPAN_RANGE: (f64, f64) = (0.01, 10.0);

#[derive(Debug, Clone, PartialEq)]
pub struct GpHypers {
    pub kernel: KernelParams,
    pub noise_variance: f64,
}

impl GpHypers {
    pub fn new(kernel: KernelParams, noise_variance: f64) -> Result<Self> {
        if !(noise_variance >= 0.0) || !noise_variance.is_finite() {
            return Err(Error::InvalidParameter("noise variance must be non-negative"));
        }
        Ok(GpHypers { kernel, noise_variance })
    }

    /// `[ln ℓ_1, .., ln ℓ_d, ln σ_s², ln σ_n²]`
    pub fn to_log_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kernel.lengthscales().iter().map(|l| libm::log(*l)).collect();
        v.push(libm::log(self.kernel.signal_variance()));
        v.push(libm::log(self.noise_variance.max(1e-300)));
        v
    }

    pub fn from_log_vector(&self, v: &[f64]) -> Result<Self> {
        let d = self.kernel.dim();
        let ls = v[..d].iter().map(|x| libm::exp(*x)).collect();
        let kernel = KernelParams::new(self.kernel.family(), ls, libm::exp(v[d]))?;
        GpHypers::new(kernel, libm::exp(v[d + 1]))
    }
}

/// Log-space search box: lengthscales relative to `span`, amplitudes absolute.
pub(crate) fn lengthscale_box(span: &[f64]) -> Vec<(f64, f64)> {
    span.iter()
        .map(|s| (libm::log(LENGTHSCALE_SPAN_RANGE.0 * s), libm::log(LENGTHSCALE_SPAN_RANGE.1 * s)))
        .collect()
}

fn search_bounds(span: &[f64]) -> Bounds {
    let mut b = lengthscale_box(span);
    b.push(LOG_SIGNAL_VARIANCE_RANGE);
    b.push(LOG_NOISE_VARIANCE_RANGE);
    Bounds::new(b).expect("finite search box")
}

#[derive(Debug, Clone)]
pub struct GaussianGp {
    hypers: GpHypers,
    x: Matrix,
    y: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
    extra_jitter: f64,
    log_ml: f64,
}

fn factorize(x: &Matrix, hypers: &GpHypers) -> Result<(Cholesky, f64)> {
    let k = gram_matrix(x, &hypers.kernel, hypers.noise_variance);
    let sv = hypers.kernel.signal_variance();
    Cholesky::with_jitter(&k, hypers.kernel.jitter() * 10.0, MAX_JITTER * sv)
}

fn lml_from(chol: &Cholesky, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len() as f64;
    -0.5 * dot(y, alpha) - 0.5 * chol.log_det() - 0.5 * n * libm::log(2.0 * PI)
}

/// Log marginal likelihood `-½ yᵀK⁻¹y - ½ log|K| - (t/2) log 2π` of the
/// inlier view of `data`.
pub fn log_marginal_likelihood(hypers: &GpHypers, data: &Dataset) -> Result<f64> {
    let view = data.inliers();
    if view.is_empty() {
        return Err(Error::InsufficientData { needed: 1, have: 0 });
    }
    check_dim(&hypers.kernel, &view)?;
    let (chol, _) = factorize(view.x(), hypers)?;
    let alpha = chol.solve(view.y());
    Ok(lml_from(&chol, view.y(), &alpha))
}

fn check_dim(kernel: &KernelParams, data: &Dataset) -> Result<()> {
    if kernel.dim() != data.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), found: data.dim() });
    }
    if data.y().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("targets must be finite"));
    }
    Ok(())
}

impl GaussianGp {
    /// Fits on the inlier view of `data`. With `search`, hyperparameters
    /// maximize the log marginal likelihood over the log-space box; without
    /// it, `init` is used as is.
    pub fn fit(data: &Dataset, init: &GpHypers, search: Option<&HyperSearch>) -> Result<Self> {
        let view = data.inliers();
        let needed = if search.is_some() { 2 } else { 1 };
        if view.len() < needed {
            return Err(Error::InsufficientData { needed, have: view.len() });
        }
        check_dim(&init.kernel, &view)?;
        let hypers = match search {
            None => init.clone(),
            Some(search) => {
                let bounds = search_bounds(&view.input_span());
                let mut objective = |v: &[f64]| -> f64 {
                    let Ok(h) = init.from_log_vector(v) else { return f64::INFINITY };
                    match factorize(view.x(), &h) {
                        Ok((chol, _)) => {
                            let alpha = chol.solve(view.y());
                            -lml_from(&chol, view.y(), &alpha)
                        }
                        Err(_) => f64::INFINITY,
                    }
                };
                let best = multistart_minimize(&mut objective, &bounds, search);
                if !best.value.is_finite() {
                    return Err(Error::NumericalFailure("no finite marginal likelihood in search box"));
                }
                init.from_log_vector(&best.x)?
            }
        };
        Self::with_hypers(&view, hypers)
    }

    fn with_hypers(view: &Dataset, hypers: GpHypers) -> Result<Self> {
        let (chol, extra_jitter) = factorize(view.x(), &hypers)?;
        let alpha = chol.solve(view.y());
        let log_ml = lml_from(&chol, view.y(), &alpha);
        Ok(GaussianGp { hypers, x: view.x().clone(), y: view.y().to_vec(), chol, alpha, extra_jitter, log_ml })
    }

    pub fn hypers(&self) -> &GpHypers {
        &self.hypers
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.log_ml
    }

    pub fn training_x(&self) -> &Matrix {
        &self.x
    }

    pub fn training_y(&self) -> &[f64] {
        &self.y
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.chol
    }

    /// `K⁻¹y`.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Jitter added beyond the default `1e-8 σ_s²`.
    pub fn extra_jitter(&self) -> f64 {
        self.extra_jitter
    }

    /// `mean = kᵀK⁻¹y`, `variance = k(x_q,x_q) - kᵀK⁻¹k` (plus `σ_n²` with
    /// `with_noise`).
    pub fn predict(&self, x_q: &[f64], with_noise: bool) -> Predictive {
        let kern = &self.hypers.kernel;
        let k = cross_covariance(&self.x, x_q, kern);
        let mean = dot(&k, &self.alpha);
        let v = self.chol.solve_lower(&k);
        let mut var = kern.signal_variance() - dot(&v, &v);
        if with_noise {
            var += self.hypers.noise_variance;
        }
        Predictive::gaussian(mean, var, with_noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn hypers(ls: f64, sv: f64, nv: f64) -> GpHypers {
        GpHypers::new(KernelParams::matern52(vec![ls], sv).unwrap(), nv).unwrap()
    }

    #[test]
    fn single_point_fixed() {
        let d = Dataset::from_points(&[[0.3]], &[1.5]).unwrap();
        let h = hypers(1.0, 2.0, 0.5);
        let gp = GaussianGp::fit(&d, &h, None).unwrap();
        let l = gp.cholesky().factor()[(0, 0)];
        assert!((l * l - (2.0 + 0.5 + 2e-8)).abs() < 1e-14);
        let search = HyperSearch::new(0);
        assert!(matches!(GaussianGp::fit(&d, &h, Some(&search)), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn scalar_log_density() {
        // K = [[1]] up to jitter, y = 0: -½ ln 2π
        let d = Dataset::from_points(&[[0.0]], &[0.0]).unwrap();
        let lml = log_marginal_likelihood(&hypers(1.0, 1.0 - 1e-8, 0.0), &d).unwrap();
        assert!((lml + 0.918_938_533_204_672_7).abs() < 1e-9);
    }

    #[test]
    fn interpolates_and_reverts() {
        let d = Dataset::from_points(&[[0.0], [0.5], [1.0]], &[1.0, -2.0, 0.5]).unwrap();
        let gp = GaussianGp::fit(&d, &hypers(0.3, 1.0, 0.0), None).unwrap();
        let p = gp.predict(&[0.5], false);
        assert!((p.mean + 2.0).abs() < 1e-6);
        assert!(p.variance() < 1e-6);
        let far = gp.predict(&[100.0], true);
        assert!(far.mean.abs() < 1e-12);
        assert!((far.variance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mask_is_respected() {
        let mut d = Dataset::from_points(&[[0.0], [0.5], [1.0]], &[1.0, 50.0, 0.5]).unwrap();
        d.set_mask(&[true, false, true]).unwrap();
        let gp = GaussianGp::fit(&d, &hypers(0.3, 1.0, 0.01), None).unwrap();
        assert_eq!(gp.training_y(), &[1.0, 0.5]);
    }
}
