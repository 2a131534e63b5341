//! Outlier classification against the robust model's predictive, and the
//! schedule that decides when to run it.
//!
//! Every call rescores every point from scratch, so a point flagged once is
//! restored as soon as the refitted model agrees with it again.

use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::laplace::StudentTGp;
use crate::special::student_t_quantile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterConfig {
    alpha: f64,
    n_init: usize,
    n_s: usize,
}

impl FilterConfig {
    pub fn new(alpha: f64, n_init: usize, n_s: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter("alpha must lie in (0, 0.5)"));
        }
        if n_init < 1 || n_s < 1 {
            return Err(Error::InvalidParameter("n_init and n_s must be at least 1"));
        }
        Ok(FilterConfig { alpha, n_init, n_s })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn n_init(&self) -> usize {
        self.n_init
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig { alpha: 0.05, n_init: 10, n_s: 2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub inlier_mask: Vec<bool>,
    /// Points excluded by the returned mask.
    pub n_outliers: usize,
    /// The half-points safeguard (or an unconverged model) reset the mask.
    pub reverted: bool,
    /// Standardized residual `(y_i - μ_i) / s_i` of every point.
    pub scores: Vec<f64>,
}

/// `true` iff `iteration >= n_init` and `(iteration - n_init) % n_s == 0`.
pub fn schedule_says_filter(iteration: usize, cfg: &FilterConfig) -> bool {
    iteration >= cfg.n_init && (iteration - cfg.n_init) % cfg.n_s == 0
}

/// Flags point `i` when its standardized residual under the observation
/// predictive (Student-t, location `μ_i`, scale `√(σ²_latent + σ₀²)`, `ν`
/// dof) falls below the lower or above the upper `α`-quantile. If fewer than
/// `⌊t/2⌋` inliers would remain, or the robust model did not converge, the
/// mask is reset to all inliers.
pub fn classify_outliers(data: &Dataset, model: &StudentTGp, cfg: &FilterConfig) -> Result<ClassificationReport> {
    if model.training_y().len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), found: model.training_y().len() });
    }
    let t = data.len();
    let dof = model.likelihood().dof();
    let upper = student_t_quantile(1.0 - cfg.alpha, dof);
    let lower = student_t_quantile(cfg.alpha, dof);
    let scores: Vec<f64> = data
        .x()
        .row_iter()
        .zip(data.y())
        .map(|(x, y)| {
            let p = model.predict_observation(x);
            (y - p.mean) / p.scale
        })
        .collect();
    let mask: Vec<bool> = scores.iter().map(|z| *z >= lower && *z <= upper).collect();
    let inliers = mask.iter().filter(|m| **m).count();
    if !model.converged() || inliers < t / 2 {
        return Ok(ClassificationReport { inlier_mask: vec![true; t], n_outliers: 0, reverted: true, scores });
    }
    Ok(ClassificationReport { inlier_mask: mask, n_outliers: t - inliers, reverted: false, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_examples() {
        let cfg = FilterConfig::default();
        for (it, expected) in [(9, false), (10, true), (11, false), (12, true), (13, false), (14, true)] {
            assert_eq!(schedule_says_filter(it, &cfg), expected, "iteration {it}");
        }
        let every = FilterConfig::new(0.05, 3, 1).unwrap();
        assert!((1..3).all(|i| !schedule_says_filter(i, &every)));
        assert!((3..30).all(|i| schedule_says_filter(i, &every)));
    }

    #[test]
    fn config_validation() {
        assert!(FilterConfig::new(0.0, 10, 2).is_err());
        assert!(FilterConfig::new(0.5, 10, 2).is_err());
        assert!(FilterConfig::new(0.05, 0, 2).is_err());
        assert!(FilterConfig::new(0.05, 1, 0).is_err());
    }
}
