//! Student-t process with additive noise inside the scaled kernel.
//!
//! `y | σ_s² ~ N(0, σ_s² K̃)` with `K̃ = K + I σ_n²` and
//! `σ_s² ~ IG(a, b)` (shape `a`, rate `b`). Marginalizing the scale gives a
//! multivariate Student-t with `2a` degrees of freedom and scale matrix
//! `(b/a) K̃`. Conditioning on `t` observations updates the scale posterior
//! to `IG(a + t/2, b + q/2)` with `q = yᵀK̃⁻¹y`, so the predictive at `x_q`
//! is a Student-t with `2a + t` degrees of freedom, the Gaussian-GP mean
//! under `K̃`, and squared scale `(2b + q) / (2a + t) · σ̃²(x_q)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp_gaussian::{lengthscale_box, LOG_NOISE_VARIANCE_RANGE};
use crate::kernels::{cross_covariance, gram_matrix, KernelParams, MAX_JITTER};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::optimize::{multistart_minimize, Bounds, HyperSearch};
use crate::predictive::Predictive;
use crate::special::ln_gamma;

pub const DEFAULT_SHAPE: f64 = 2.0;
pub const DEFAULT_RATE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TProcessParams {
    kernel: KernelParams,
    relative_noise: f64,
    shape: f64,
    rate: f64,
}

impl TProcessParams {
    pub fn new(kernel: KernelParams, relative_noise: f64, shape: f64, rate: f64) -> Result<Self> {
        if !(relative_noise >= 0.0) || !relative_noise.is_finite() {
            return Err(Error::InvalidParameter("relative noise must be non-negative"));
        }
        if !(shape > 1.0) || !shape.is_finite() {
            return Err(Error::InvalidParameter("inverse-gamma shape must exceed 1"));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter("inverse-gamma rate must be positive"));
        }
        Ok(TProcessParams { kernel, relative_noise, shape, rate })
    }

    /// `a = 2`, `b = 1`.
    pub fn with_defaults(kernel: KernelParams, relative_noise: f64) -> Result<Self> {
        Self::new(kernel, relative_noise, DEFAULT_SHAPE, DEFAULT_RATE)
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn relative_noise(&self) -> f64 {
        self.relative_noise
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `[ln ℓ_1, .., ln ℓ_d, ln σ_n²]`
    pub fn to_log_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kernel.lengthscales().iter().map(|l| libm::log(*l)).collect();
        v.push(libm::log(self.relative_noise.max(1e-300)));
        v
    }

    fn from_log_vector(&self, v: &[f64]) -> Result<Self> {
        let d = self.kernel.dim();
        let kernel = self.kernel.with_lengthscales(v[..d].iter().map(|x| libm::exp(*x)).collect())?;
        Self::new(kernel, libm::exp(v[d]), self.shape, self.rate)
    }
}

fn factorize(x: &Matrix, params: &TProcessParams) -> Result<Cholesky> {
    let k = gram_matrix(x, &params.kernel, params.relative_noise);
    let sv = params.kernel.signal_variance();
    Cholesky::with_jitter(&k, params.kernel.jitter() * 10.0, MAX_JITTER * sv).map(|(c, _)| c)
}

fn log_density_from(chol: &Cholesky, quad: f64, n: usize, a: f64, b: f64) -> f64 {
    let n = n as f64;
    ln_gamma(a + 0.5 * n) - ln_gamma(a) - 0.5 * n * libm::log(2.0 * PI * b) - 0.5 * chol.log_det()
        - (a + 0.5 * n) * libm::log1p(quad / (2.0 * b))
}

/// Log density of `y` under the zero-mean multivariate Student-t marginal
/// of the process at inputs `x`.
pub fn mvt_log_density(y: &[f64], params: &TProcessParams, x: &Matrix) -> Result<f64> {
    if x.rows() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.rows(), found: y.len() });
    }
    if x.cols() != params.kernel.dim() {
        return Err(Error::DimensionMismatch { expected: params.kernel.dim(), found: x.cols() });
    }
    let chol = factorize(x, params)?;
    let alpha = chol.solve(y);
    Ok(log_density_from(&chol, dot(y, &alpha), y.len(), params.shape, params.rate))
}

#[derive(Debug, Clone)]
pub struct TProcess {
    params: TProcessParams,
    x: Matrix,
    y: Vec<f64>,
    chol: Cholesky,
    alpha: Vec<f64>,
    quad: f64,
    log_evidence: f64,
}

impl TProcess {
    /// Fits on every point of `data`. With `search`, lengthscales and the
    /// relative noise maximize the marginal density; `(a, b)` and the kernel
    /// signal variance stay fixed.
    pub fn fit(data: &Dataset, init: &TProcessParams, search: Option<&HyperSearch>) -> Result<Self> {
        let needed = if search.is_some() { 2 } else { 1 };
        if data.len() < needed {
            return Err(Error::InsufficientData { needed, have: data.len() });
        }
        if data.dim() != init.kernel.dim() {
            return Err(Error::DimensionMismatch { expected: init.kernel.dim(), found: data.dim() });
        }
        if data.y().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("targets must be finite"));
        }
        let params = match search {
            None => init.clone(),
            Some(search) => {
                let mut b = lengthscale_box(&data.input_span());
                b.push(LOG_NOISE_VARIANCE_RANGE);
                let bounds = Bounds::new(b).expect("finite search box");
                let mut objective = |v: &[f64]| -> f64 {
                    let Ok(p) = init.from_log_vector(v) else { return f64::INFINITY };
                    match mvt_log_density(data.y(), &p, data.x()) {
                        Ok(ld) => -ld,
                        Err(_) => f64::INFINITY,
                    }
                };
                let best = multistart_minimize(&mut objective, &bounds, search);
                if !best.value.is_finite() {
                    return Err(Error::NumericalFailure("no finite t-process evidence in search box"));
                }
                init.from_log_vector(&best.x)?
            }
        };
        let chol = factorize(data.x(), &params)?;
        let alpha = chol.solve(data.y());
        let quad = dot(data.y(), &alpha);
        let log_evidence = log_density_from(&chol, quad, data.len(), params.shape, params.rate);
        Ok(TProcess { params, x: data.x().clone(), y: data.y().to_vec(), chol, alpha, quad, log_evidence })
    }

    pub fn params(&self) -> &TProcessParams {
        &self.params
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// `yᵀK̃⁻¹y`.
    pub fn quadratic_form(&self) -> f64 {
        self.quad
    }

    pub fn training_y(&self) -> &[f64] {
        &self.y
    }

    pub fn posterior_dof(&self) -> f64 {
        2.0 * self.params.shape + self.y.len() as f64
    }

    /// Student-t predictive of a new observation (noise included).
    pub fn predict(&self, x_q: &[f64]) -> Predictive {
        let kern = &self.params.kernel;
        let k = cross_covariance(&self.x, x_q, kern);
        let location = dot(&k, &self.alpha);
        let v = self.chol.solve_lower(&k);
        let gp_var = (kern.signal_variance() + self.params.relative_noise - dot(&v, &v)).max(0.0);
        let t = self.y.len() as f64;
        let (a, b) = (self.params.shape, self.params.rate);
        let scale2 = (2.0 * b + self.quad) / (2.0 * a + t) * gp_var;
        Predictive::student_t(location, libm::sqrt(scale2), self.posterior_dof(), true)
    }
}
