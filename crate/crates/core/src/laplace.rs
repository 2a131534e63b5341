//! GP with a non-Gaussian observation likelihood, posterior approximated by
//! the Laplace method.
//!
//! The latent mode is found by damped Newton iterations on
//! `ψ(f) = log p(y|f) - ½ fᵀK⁻¹f`, parametrized by `a = K⁻¹f` so that `K`
//! is never inverted. Around the mode the posterior is `N(f̂, (K⁻¹ + W)⁻¹)`
//! with `W = -∇∇ log p(y|f̂)`, and predictions are
//!
//! ```text
//! μ(x_q)  = kᵀ K⁻¹ f̂
//! σ²(x_q) = k(x_q, x_q) - kᵀ (K + W⁻¹)⁻¹ k
//! ```
//!
//! The Student-t likelihood is not log-concave: `W_i < 0` once
//! `|y_i - f_i| > σ₀√ν`. Newton steps therefore use `W₊ = max(W, 0)`, which
//! keeps `B = I + W₊^½ K W₊^½` positive definite; the gradient stays exact
//! and a backtracking line search guarantees ascent.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::gp_gaussian::{lengthscale_box, LOG_NOISE_VARIANCE_RANGE, LOG_SIGNAL_VARIANCE_RANGE};
use crate::kernels::{cross_covariance, gram_matrix, KernelParams};
use crate::linalg::{dot, lu_solve_many, Cholesky, Matrix};
use crate::optimize::{multistart_minimize, Bounds, HyperSearch};
use crate::predictive::Predictive;
use crate::special::ln_gamma_ratio;

pub const MAX_NEWTON_ITERATIONS: usize = 100;
pub const STATIONARITY_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_DOF: f64 = 4.0;

/// Per-observation likelihood `p(y | f)`.
pub trait ObservationLikelihood: Clone {
    fn log_density(&self, y: f64, f: f64) -> f64;

    /// First and second derivatives of `log p(y|f)` with respect to `f`.
    fn derivatives(&self, y: f64, f: f64) -> (f64, f64);

    /// Observation-level predictive given the latent Gaussian predictive.
    fn observation_predictive(&self, latent: &Predictive) -> Predictive;
}

/// Student-t likelihood with `ν` degrees of freedom and scale `σ₀`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentTLik {
    dof: f64,
    scale: f64,
    /// `ln Γ((ν+1)/2) - ln Γ(ν/2) - ½ ln(νπ) - ln σ₀`
    log_norm: f64,
}

impl StudentTLik {
    pub fn new(dof: f64, scale: f64) -> Result<Self> {
        if !(dof >= 2.0) || !dof.is_finite() {
            return Err(Error::InvalidParameter("Student-t degrees of freedom must be at least 2"));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter("Student-t scale must be positive"));
        }
        let log_norm = ln_gamma_ratio(0.5 * dof, 0.5) - 0.5 * libm::log(dof * PI) - libm::log(scale);
        Ok(StudentTLik { dof, scale, log_norm })
    }

    pub fn with_scale(scale: f64) -> Result<Self> {
        Self::new(DEFAULT_DOF, scale)
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

impl ObservationLikelihood for StudentTLik {
    fn log_density(&self, y: f64, f: f64) -> f64 {
        let (nu, s) = (self.dof, self.scale);
        let r = y - f;
        self.log_norm - 0.5 * (nu + 1.0) * libm::log1p(r * r / (nu * s * s))
    }

    fn derivatives(&self, y: f64, f: f64) -> (f64, f64) {
        let nu = self.dof;
        let s2 = self.scale * self.scale;
        let r = y - f;
        let denom = nu * s2 + r * r;
        let first = (nu + 1.0) * r / denom;
        let second = (nu + 1.0) * (r * r - nu * s2) / (denom * denom);
        (first, second)
    }

    fn observation_predictive(&self, latent: &Predictive) -> Predictive {
        let scale = libm::sqrt(latent.variance() + self.scale * self.scale);
        Predictive::student_t(latent.mean, scale, self.dof, true)
    }
}

/// Gaussian likelihood; exists so the Laplace machinery can be checked
/// against exact GP regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianLik {
    pub variance: f64,
}

impl ObservationLikelihood for GaussianLik {
    fn log_density(&self, y: f64, f: f64) -> f64 {
        let r = y - f;
        -0.5 * libm::log(2.0 * PI * self.variance) - 0.5 * r * r / self.variance
    }

    fn derivatives(&self, y: f64, f: f64) -> (f64, f64) {
        ((y - f) / self.variance, -1.0 / self.variance)
    }

    fn observation_predictive(&self, latent: &Predictive) -> Predictive {
        Predictive::gaussian(latent.mean, latent.variance() + self.variance, true)
    }
}

/// Converged (or abandoned) Newton state.
#[derive(Debug, Clone, PartialEq)]
pub struct LaplaceState {
    /// Posterior mode of the latent values.
    pub f_hat: Vec<f64>,
    /// `-∇∇ log p(y|f)` at `f_hat`, unfloored (entries may be negative).
    pub w: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `ψ` after every accepted step, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

struct Mode {
    a: Vec<f64>,
    state: LaplaceState,
    log_lik: f64,
    log_det_b: f64,
}

fn psi<L: ObservationLikelihood>(lik: &L, y: &[f64], a: &[f64], f: &[f64]) -> (f64, f64) {
    let ll: f64 = y.iter().zip(f).map(|(yi, fi)| lik.log_density(*yi, *fi)).sum();
    (ll - 0.5 * dot(a, f), ll)
}

/// Fills the lower triangle of `I + W½ K W½` (all the factorization reads).
fn fill_b_matrix(k: &Matrix, sqrt_w: &[f64], b: &mut Matrix) {
    for i in 0..k.rows() {
        let (ki, bi) = (k.row(i), b.row_mut(i));
        for j in 0..=i {
            bi[j] = sqrt_w[i] * ki[j] * sqrt_w[j];
        }
        bi[i] += 1.0;
    }
}

fn b_matrix(k: &Matrix, sqrt_w: &[f64]) -> Matrix {
    let mut b = Matrix::zeros(k.rows(), k.rows());
    fill_b_matrix(k, sqrt_w, &mut b);
    b
}

fn find_mode<L: ObservationLikelihood>(k: &Matrix, y: &[f64], lik: &L, warm: Option<&[f64]>) -> Result<Mode> {
    let n = y.len();
    let mut a = match warm {
        Some(w) if w.len() == n => w.to_vec(),
        _ => vec![0.0; n],
    };
    let mut f = k.mul_vec(&a);
    let (mut obj, _) = psi(lik, y, &a, &f);
    if !obj.is_finite() {
        a = vec![0.0; n];
        f = vec![0.0; n];
        obj = psi(lik, y, &a, &f).0;
    }
    let mut trace = vec![obj];
    let mut iterations = 0;
    let (mut grad, mut w, mut sqrt_w) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut b, mut sol, mut direction) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let (mut a_try, mut f_try) = (vec![0.0; n], vec![0.0; n]);
    let mut scratch = Matrix::zeros(n, n);
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let mut residual = 0.0f64;
        for i in 0..n {
            let (g, h) = lik.derivatives(y[i], f[i]);
            grad[i] = g;
            w[i] = -h;
            residual = residual.max((g - a[i]).abs());
        }
        if residual <= STATIONARITY_TOLERANCE {
            break;
        }
        iterations += 1;
        for i in 0..n {
            sqrt_w[i] = libm::sqrt(w[i].max(0.0));
            b[i] = w[i].max(0.0) * f[i] + grad[i];
        }
        fill_b_matrix(k, &sqrt_w, &mut scratch);
        let chol = Cholesky::from_matrix(core::mem::replace(&mut scratch, Matrix::zeros(0, 0)))
            .ok_or(Error::NumericalFailure("Laplace Newton system is not positive definite"))?;
        k.mul_vec_into(&b, &mut sol);
        sol.iter_mut().zip(&sqrt_w).for_each(|(v, s)| *v *= s);
        chol.solve_in_place(&mut sol);
        scratch = chol.into_factor();
        for i in 0..n {
            direction[i] = b[i] - sqrt_w[i] * sol[i] - a[i];
        }

        let slack = 64.0 * f64::EPSILON * (1.0 + obj.abs());
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            a_try.iter_mut().zip(a.iter().zip(&direction)).for_each(|(t, (ai, di))| *t = ai + step * di);
            k.mul_vec_into(&a_try, &mut f_try);
            let (obj_try, _) = psi(lik, y, &a_try, &f_try);
            if obj_try.is_finite() && obj_try >= obj - slack {
                accepted = Some(obj_try);
                break;
            }
            step *= 0.5;
        }
        let Some(obj_new) = accepted else { break };
        let stalled = obj_new <= obj && step < 1.0;
        core::mem::swap(&mut a, &mut a_try);
        core::mem::swap(&mut f, &mut f_try);
        obj = obj_new;
        trace.push(obj);
        if stalled {
            break;
        }
    }

    let (grad, w): (Vec<f64>, Vec<f64>) =
        y.iter().zip(&f).map(|(yi, fi)| lik.derivatives(*yi, *fi)).map(|(g, h)| (g, -h)).unzip();
    let residual = grad.iter().zip(&a).map(|(g, ai)| (g - ai).abs()).fold(0.0, f64::max);
    let sqrt_w: Vec<f64> = w.iter().map(|wi| libm::sqrt(wi.max(0.0))).collect();
    let log_det_b = Cholesky::from_matrix(b_matrix(k, &sqrt_w))
        .ok_or(Error::NumericalFailure("Laplace Newton system is not positive definite"))?
        .log_det();
    let (_, log_lik) = psi(lik, y, &a, &f);
    Ok(Mode {
        a,
        state: LaplaceState {
            f_hat: f,
            w,
            converged: residual <= STATIONARITY_TOLERANCE,
            iterations,
            objective_trace: trace,
        },
        log_lik,
        log_det_b,
    })
}

/// Laplace-approximated GP posterior.
#[derive(Debug, Clone)]
pub struct LaplaceGp<L: ObservationLikelihood> {
    kernel: KernelParams,
    lik: L,
    x: Matrix,
    y: Vec<f64>,
    prior_gram: Matrix,
    a: Vec<f64>,
    state: LaplaceState,
    /// `(K + W⁻¹)⁻¹`, symmetric.
    variance_operator: Matrix,
    log_evidence: f64,
}

pub type StudentTGp = LaplaceGp<StudentTLik>;

impl<L: ObservationLikelihood> LaplaceGp<L> {
    /// Fits the latent mode for fixed kernel and likelihood parameters on
    /// every point of `data` (the mask is ignored).
    pub fn fit_fixed(data: &Dataset, kernel: &KernelParams, lik: &L) -> Result<Self> {
        Self::build(data, kernel, lik, None)
    }

    fn build(data: &Dataset, kernel: &KernelParams, lik: &L, warm: Option<&[f64]>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::InsufficientData { needed: 1, have: 0 });
        }
        if kernel.dim() != data.dim() {
            return Err(Error::DimensionMismatch { expected: kernel.dim(), found: data.dim() });
        }
        if data.y().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("targets must be finite"));
        }
        let k = gram_matrix(data.x(), kernel, 0.0);
        let mode = find_mode(&k, data.y(), lik, warm)?;
        let log_evidence = mode.log_lik - 0.5 * dot(&mode.a, &mode.state.f_hat) - 0.5 * mode.log_det_b;
        let variance_operator = variance_operator(&k, &mode.state.w)?;
        Ok(LaplaceGp {
            kernel: kernel.clone(),
            lik: lik.clone(),
            x: data.x().clone(),
            y: data.y().to_vec(),
            prior_gram: k,
            a: mode.a,
            state: mode.state,
            variance_operator,
            log_evidence,
        })
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn likelihood(&self) -> &L {
        &self.lik
    }

    pub fn state(&self) -> &LaplaceState {
        &self.state
    }

    pub fn converged(&self) -> bool {
        self.state.converged
    }

    pub fn training_x(&self) -> &Matrix {
        &self.x
    }

    pub fn training_y(&self) -> &[f64] {
        &self.y
    }

    /// `K⁻¹ f̂`.
    pub fn latent_weights(&self) -> &[f64] {
        &self.a
    }

    pub fn prior_gram(&self) -> &Matrix {
        &self.prior_gram
    }

    /// `log p(y|f̂) - ½ f̂ᵀK⁻¹f̂ - ½ log|I + K W₊|`.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// `∇ log p(y|f̂) - K⁻¹f̂`, zero at an exact mode.
    pub fn stationarity_residual(&self) -> Vec<f64> {
        self.y
            .iter()
            .zip(&self.state.f_hat)
            .zip(&self.a)
            .map(|((y, f), a)| self.lik.derivatives(*y, *f).0 - a)
            .collect()
    }

    /// Gaussian predictive of the latent function.
    pub fn predict_latent(&self, x_q: &[f64]) -> Predictive {
        let k = cross_covariance(&self.x, x_q, &self.kernel);
        let mean = dot(&k, &self.a);
        let mk = self.variance_operator.mul_vec(&k);
        let var = self.kernel.signal_variance() - dot(&k, &mk);
        Predictive::gaussian(mean, var, false)
    }

    /// Predictive of a new observation at `x_q`.
    pub fn predict_observation(&self, x_q: &[f64]) -> Predictive {
        self.lik.observation_predictive(&self.predict_latent(x_q))
    }
}

/// `(K + W⁻¹)⁻¹ = (I + W K)⁻¹ W`, with exact (possibly negative) `W`.
/// Falls back to the floored `W₊ = max(W, 0)` when `I + W K` is singular.
fn variance_operator(k: &Matrix, w: &[f64]) -> Result<Matrix> {
    let n = w.len();
    let mut lhs = Matrix::identity(n);
    let mut rhs = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            lhs[(i, j)] += w[i] * k[(i, j)];
        }
        rhs[(i, i)] = w[i];
    }
    let m = match lu_solve_many(&lhs, &rhs) {
        Some(m) => m,
        None => {
            let sqrt_w: Vec<f64> = w.iter().map(|wi| libm::sqrt(wi.max(0.0))).collect();
            let chol = Cholesky::from_matrix(b_matrix(k, &sqrt_w))
                .ok_or(Error::NumericalFailure("Laplace predictive system is not positive definite"))?;
            let mut m = Matrix::zeros(n, n);
            for j in 0..n {
                let mut e = vec![0.0; n];
                e[j] = sqrt_w[j];
                let col = chol.solve(&e);
                for i in 0..n {
                    m[(i, j)] = sqrt_w[i] * col[i];
                }
            }
            m
        }
    };
    let mut sym = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            sym[(i, j)] = 0.5 * (m[(i, j)] + m[(j, i)]);
        }
    }
    Ok(sym)
}

pub const LOG_STUDENT_T_SCALE2_RANGE: (f64, f64) = LOG_NOISE_VARIANCE_RANGE;

impl LaplaceGp<StudentTLik> {
    /// Fits on every point of `data`. With `search`, the lengthscales,
    /// signal variance and `σ₀` maximize the Laplace evidence; `ν` always
    /// stays at `lik.dof()`.
    pub fn fit(data: &Dataset, kernel: &KernelParams, lik: &StudentTLik, search: Option<&HyperSearch>) -> Result<Self> {
        let Some(search) = search else {
            return Self::fit_fixed(data, kernel, lik);
        };
        if data.len() < 2 {
            return Err(Error::InsufficientData { needed: 2, have: data.len() });
        }
        if kernel.dim() != data.dim() {
            return Err(Error::DimensionMismatch { expected: kernel.dim(), found: data.dim() });
        }
        let mut b = lengthscale_box(&data.input_span());
        b.push(LOG_SIGNAL_VARIANCE_RANGE);
        b.push(LOG_STUDENT_T_SCALE2_RANGE);
        let bounds = Bounds::new(b).expect("finite search box");
        let d = kernel.dim();
        let unpack = |v: &[f64]| -> Result<(KernelParams, StudentTLik)> {
            let ls = v[..d].iter().map(|x| libm::exp(*x)).collect();
            let kern = KernelParams::new(kernel.family(), ls, libm::exp(v[d]))?;
            let lik = StudentTLik::new(lik.dof(), libm::exp(0.5 * v[d + 1]))?;
            Ok((kern, lik))
        };
        // The Laplace evidence is only meaningful at the mode, so the search
        // skips hyperparameters whose Newton iteration stalls short of it
        // (this happens near `σ₀ → 0`, where `K` is badly conditioned). Only
        // if nothing in the box converges are stalled modes accepted.
        let search_with = |require_converged: bool| {
            let mut warm: Vec<f64> = Vec::new();
            let mut best_a: (f64, Vec<f64>) = (f64::INFINITY, Vec::new());
            let mut objective = |v: &[f64]| -> f64 {
                let Ok((kern, l)) = unpack(v) else { return f64::INFINITY };
                let k = gram_matrix(data.x(), &kern, 0.0);
                match find_mode(&k, data.y(), &l, Some(&warm)) {
                    Ok(mode) => {
                        let ev = mode.log_lik - 0.5 * dot(&mode.a, &mode.state.f_hat) - 0.5 * mode.log_det_b;
                        if !ev.is_finite() || (require_converged && !mode.state.converged) {
                            return f64::INFINITY;
                        }
                        if -ev < best_a.0 {
                            best_a = (-ev, mode.a.clone());
                        }
                        warm = mode.a;
                        -ev
                    }
                    Err(_) => f64::INFINITY,
                }
            };
            let best = multistart_minimize(&mut objective, &bounds, search);
            (best, best_a.1)
        };
        let (mut best, mut best_a) = search_with(true);
        if !best.value.is_finite() {
            (best, best_a) = search_with(false);
        }
        if !best.value.is_finite() {
            return Err(Error::NumericalFailure("no finite Laplace evidence in search box"));
        }
        let (kern, l) = unpack(&best.x)?;
        let fitted = Self::build(data, &kern, &l, Some(&best_a))?;
        if fitted.converged() {
            Ok(fitted)
        } else {
            Self::build(data, &kern, &l, None)
        }
    }

    /// `[ln ℓ_1, .., ln ℓ_d, ln σ_s², ln σ₀²]`, the coordinates of the
    /// hyperparameter search (for warm starts).
    pub fn to_log_vector(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.kernel.lengthscales().iter().map(|l| libm::log(*l)).collect();
        v.push(libm::log(self.kernel.signal_variance()));
        v.push(2.0 * libm::log(self.lik.scale()));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn student_t_density_at_mode() {
        let lik = StudentTLik::new(4.0, 1.0).unwrap();
        assert!((lik.log_density(0.3, 0.3) - libm::log(0.375)).abs() < 1e-14);
        assert!((libm::log(0.375) + 0.980_829_253_011_726).abs() < 1e-12);
        assert_eq!(lik.log_density(2.0, 0.5), lik.log_density(-1.0, 0.5));
        assert_eq!(lik.derivatives(1.0, 1.0).0, 0.0);
        assert!(lik.derivatives(10.0, 0.0).1 > 0.0);
    }

    #[test]
    fn invalid_likelihoods() {
        assert!(StudentTLik::new(1.5, 1.0).is_err());
        assert!(StudentTLik::new(4.0, 0.0).is_err());
        assert!(StudentTLik::new(2.0, 1.0).is_ok());
    }

    #[test]
    fn duplicate_points_share_mode() {
        let d = Dataset::from_points(&[[0.4], [0.4]], &[1.3, 1.3]).unwrap();
        let kern = KernelParams::matern52(vec![0.5], 1.0).unwrap();
        let gp = LaplaceGp::fit_fixed(&d, &kern, &StudentTLik::new(4.0, 0.2).unwrap()).unwrap();
        let f = &gp.state().f_hat;
        assert!(gp.converged());
        assert!((f[0] - f[1]).abs() < 1e-12);
    }
}
