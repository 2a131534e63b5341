//! Expected improvement (minimization) and its inner maximizer.

use alloc::vec::Vec;

use crate::design::latin_hypercube;
use crate::error::{Error, Result};
use crate::optimize::Bounds;
use crate::predictive::{Predictive, PredictiveFamily};
use crate::rng::{self, stream};
use crate::special::{normal_cdf, normal_pdf, student_t_cdf, student_t_pdf};
use crate::surrogate::Surrogate;

/// `E[max(0, y* - y)]` for Gaussian `y`: `(y* - μ)Φ(z) + σφ(z)`.
pub fn ei_gaussian(pred: &Predictive, y_star: f64) -> f64 {
    let gap = y_star - pred.mean;
    let s = pred.scale;
    if !(s > 0.0) {
        return gap.max(0.0);
    }
    let z = gap / s;
    (gap * normal_cdf(z) + s * normal_pdf(z)).max(0.0)
}

/// `E[max(0, y* - y)]` for `y = μ + σT`, `T ~ t_ν`:
/// `(y* - μ)F_ν(z) + σ (ν + z²)/(ν - 1) f_ν(z)`.
pub fn ei_student_t(pred: &Predictive, y_star: f64) -> Result<f64> {
    let PredictiveFamily::StudentT { dof } = pred.family else {
        return Err(Error::InvalidParameter("Student-t EI needs a Student-t predictive"));
    };
    if !(dof > 1.0) {
        return Err(Error::InvalidParameter("expected improvement needs more than 1 degree of freedom"));
    }
    let gap = y_star - pred.mean;
    let s = pred.scale;
    if !(s > 0.0) {
        return Ok(gap.max(0.0));
    }
    let z = gap / s;
    Ok((gap * student_t_cdf(z, dof) + s * (dof + z * z) / (dof - 1.0) * student_t_pdf(z, dof)).max(0.0))
}

/// EI under whichever family `pred` carries (0 when undefined).
pub fn expected_improvement(pred: &Predictive, y_star: f64) -> f64 {
    match pred.family {
        PredictiveFamily::Gaussian => ei_gaussian(pred, y_star),
        PredictiveFamily::StudentT { .. } => ei_student_t(pred, y_star).unwrap_or(0.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AcquisitionConfig {
    /// Latin-hypercube candidates scored before refinement.
    pub candidates: usize,
    /// Best candidates refined by coordinate search.
    pub refine_top: usize,
    pub sweeps: usize,
}

impl Default for AcquisitionConfig {
    fn default() -> Self {
        AcquisitionConfig { candidates: 1000, refine_top: 5, sweeps: 20 }
    }
}

/// Maximizes EI over `bounds`: scores a seeded Latin-hypercube candidate
/// set, then refines the best few by coordinate steps that halve whenever a
/// full sweep fails to improve. The result never scores below the best raw
/// candidate; ties go to the earliest candidate.
pub fn maximize_acquisition<S: Surrogate + ?Sized>(
    model: &S,
    y_star: f64,
    bounds: &Bounds,
    config: &AcquisitionConfig,
    seed: u64,
) -> Vec<f64> {
    let mut rng = rng::keyed_rng(seed, &[stream::ACQUISITION]);
    let n = config.candidates.max(1);
    let cands = latin_hypercube(n, bounds, &mut rng);
    let score = |x: &[f64]| expected_improvement(&model.predict(x), y_star);
    let scores: Vec<f64> = cands.row_iter().map(score).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores[j].total_cmp(&scores[i]).then(i.cmp(&j)));

    let d = bounds.dim();
    let mut best_x = cands.row(order[0]).to_vec();
    let mut best_v = scores[order[0]];
    for &idx in order.iter().take(config.refine_top) {
        let mut x = cands.row(idx).to_vec();
        let mut v = scores[idx];
        let mut steps: Vec<f64> = (0..d).map(|j| 0.1 * bounds.width(j)).collect();
        for _ in 0..config.sweeps {
            let mut improved = false;
            for j in 0..d {
                for dir in [1.0, -1.0] {
                    let mut trial = x.clone();
                    trial[j] += dir * steps[j];
                    bounds.clamp(&mut trial);
                    if trial[j] == x[j] {
                        continue;
                    }
                    let tv = score(&trial);
                    if tv > v {
                        x = trial;
                        v = tv;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                steps.iter_mut().for_each(|s| *s *= 0.5);
            }
        }
        if v > best_v {
            best_v = v;
            best_x = x;
        }
    }
    best_x
}
