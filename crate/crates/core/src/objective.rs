//! Benchmark objectives: lazily sampled GP functions and outlier injection.

use alloc::vec::Vec;

use crate::design::latin_hypercube;
use crate::error::{Error, Result};
use crate::kernels::{cross_covariance, KernelParams, MAX_JITTER};
use crate::linalg::{dot, Cholesky, Matrix};
use crate::optimize::Bounds;
use crate::rng::{self, stream};

/// A sample path of a zero-mean GP, drawn lazily.
///
/// Each new query is drawn from the GP conditioned on every `(x, f)` pair
/// seen so far (noise-free up to jitter), so the path is consistent: the
/// same `x` always returns the same value. Draw `i` uses the keyed stream
/// `(seed, i)`, so a given seed and query order reproduce the same values.
#[derive(Debug, Clone)]
pub struct SyntheticObjective {
    kernel: KernelParams,
    seed: u64,
    xs: Matrix,
    fs: Vec<f64>,
    chol: Option<Cholesky>,
    /// `K⁻¹ f` for the cached pairs, refreshed on each append.
    weights: Vec<f64>,
    jitter: f64,
}

/// Starts an empty GP sample path with `kernel` on `d` inputs.
pub fn sample_gp_function(kernel: &KernelParams, d: usize, seed: u64) -> Result<SyntheticObjective> {
    if kernel.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: kernel.dim() });
    }
    Ok(SyntheticObjective {
        kernel: kernel.clone(),
        seed,
        xs: Matrix::with_cols(d),
        fs: Vec::new(),
        chol: None,
        weights: Vec::new(),
        jitter: kernel.jitter(),
    })
}

impl SyntheticObjective {
    pub fn new(kernel: &KernelParams, seed: u64) -> Self {
        sample_gp_function(kernel, kernel.dim(), seed).expect("dimension taken from kernel")
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn cached_len(&self) -> usize {
        self.fs.len()
    }

    /// Pins the path at `count` Latin-hypercube points of `bounds` (drawn in
    /// a fixed order). Later queries are then nearly determined by these
    /// anchors, whatever order they arrive in.
    pub fn anchor(&mut self, bounds: &Bounds, count: usize) -> Result<()> {
        let pts = latin_hypercube(count, bounds, &mut rng::keyed_rng(self.seed, &[stream::ANCHORS]));
        for row in pts.row_iter() {
            self.query(row)?;
        }
        Ok(())
    }

    fn lookup(&self, x: &[f64]) -> Option<f64> {
        self.xs
            .row_iter()
            .zip(&self.fs)
            .find(|(r, _)| r.iter().zip(x).all(|(a, b)| a.to_bits() == b.to_bits()))
            .map(|(_, f)| *f)
    }

    /// Posterior mean and variance of the path at `x` given the cache.
    pub fn conditional(&self, x: &[f64]) -> (f64, f64) {
        let prior = self.kernel.signal_variance();
        let Some(chol) = &self.chol else { return (0.0, prior) };
        let k = cross_covariance(&self.xs, x, &self.kernel);
        let v = chol.solve_lower(&k);
        (dot(&k, &self.weights), (prior - dot(&v, &v)).max(0.0))
    }

    /// Posterior mean of the path at `x` given the cache, without the
    /// variance solve.
    pub fn conditional_mean(&self, x: &[f64]) -> f64 {
        if self.fs.is_empty() {
            return 0.0;
        }
        dot(&cross_covariance(&self.xs, x, &self.kernel), &self.weights)
    }

    /// Value of the path at `x`, sampling and caching it on first use.
    pub fn query(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.len() });
        }
        if let Some(f) = self.lookup(x) {
            return Ok(f);
        }
        let (mean, var) = self.conditional(x);
        let z = rng::standard_normal(&mut rng::keyed_rng(self.seed, &[stream::FUNCTION_DRAW, self.fs.len() as u64]));
        let value = mean + libm::sqrt(var) * z;
        self.append(x, value)?;
        Ok(value)
    }

    fn append(&mut self, x: &[f64], value: f64) -> Result<()> {
        let diag = self.kernel.signal_variance() + self.jitter;
        let cross = cross_covariance(&self.xs, x, &self.kernel);
        self.xs.push_row(x)?;
        self.fs.push(value);
        let grown = match &mut self.chol {
            None => {
                self.chol = Cholesky::new(&Matrix::from_row_major(1, 1, alloc::vec![diag])?);
                self.chol.is_some()
            }
            Some(c) => c.append(&cross, diag),
        };
        if !grown {
            self.refactor()?;
        }
        let chol = self.chol.as_ref().expect("factor present after append");
        self.weights = chol.solve(&self.fs);
        Ok(())
    }

    /// Rebuilds the factor with escalated jitter.
    fn refactor(&mut self) -> Result<()> {
        let max = MAX_JITTER * self.kernel.signal_variance();
        loop {
            self.jitter *= 10.0;
            if self.jitter > max * (1.0 + 1e-12) {
                return Err(Error::NumericalFailure("GP sample path conditioning failed after jitter escalation"));
            }
            let mut k = crate::kernels::gram_matrix(&self.xs, &self.kernel, 0.0);
            k.add_diagonal(self.jitter - self.kernel.jitter());
            if let Some(c) = Cholesky::new(&k) {
                self.chol = Some(c);
                return Ok(());
            }
        }
    }
}

/// Outlier injection: with probability `rate` the observation is replaced by
/// a draw from `U(low, high)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierModel {
    rate: f64,
    low: f64,
    high: f64,
}

impl OutlierModel {
    pub fn new(rate: f64) -> Result<Self> {
        Self::with_range(rate, 1.0, 2.0)
    }

    pub fn with_range(rate: f64, low: f64, high: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rate) {
            return Err(Error::InvalidParameter("outlier rate must lie in [0, 1]"));
        }
        if !(low <= high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::InvalidParameter("outlier range must be finite with low <= high"));
        }
        Ok(OutlierModel { rate, low, high })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Corrupts `y_true` for `(trial_seed, iteration)`.
///
/// The decision uniform and the replacement value come from a stream keyed
/// only on `(trial_seed, iteration)`, so every method sees the same outliers
/// at the same iterations, and a point that is an outlier at rate `ρ` stays
/// one at any larger rate.
pub fn corrupt(y_true: f64, model: &OutlierModel, iteration: usize, trial_seed: u64) -> (f64, bool) {
    let mut r = rng::keyed_rng(trial_seed, &[stream::OUTLIER, iteration as u64]);
    let u = rng::uniform(&mut r);
    let v = rng::uniform(&mut r);
    if u < model.rate {
        (model.low + (model.high - model.low) * v, true)
    } else {
        (y_true, false)
    }
}
