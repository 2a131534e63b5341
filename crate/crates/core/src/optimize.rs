//! Box bounds, a Nelder–Mead simplex minimizer, and the multi-start driver
//! used for every hyperparameter search.

use alloc::vec;
use alloc::vec::Vec;

use crate::design::latin_hypercube;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    intervals: Vec<(f64, f64)>,
}

impl Bounds {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidParameter("bounds need at least one dimension"));
        }
        if intervals.iter().any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidParameter("bounds must be finite with lower < upper"));
        }
        Ok(Bounds { intervals })
    }

    pub fn unit(dim: usize) -> Self {
        Bounds { intervals: vec![(0.0, 1.0); dim] }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn interval(&self, j: usize) -> (f64, f64) {
        self.intervals[j]
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn width(&self, j: usize) -> f64 {
        self.intervals[j].1 - self.intervals[j].0
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(&self.intervals).all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(&self.intervals) {
            *v = v.clamp(*lo, *hi);
        }
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.intervals.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect()
    }
}

/// Budget and seed for a multi-start hyperparameter search.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSearch {
    pub restarts: usize,
    pub evals_per_start: usize,
    pub seed: u64,
    /// Replaces the first random start (previous optimum, in the model's
    /// own log-parameter coordinates).
    pub warm_start: Option<Vec<f64>>,
}

impl HyperSearch {
    pub fn new(seed: u64) -> Self {
        HyperSearch { restarts: 5, evals_per_start: 200, seed, warm_start: None }
    }

    pub fn with_warm_start(mut self, start: Option<Vec<f64>>) -> Self {
        self.warm_start = start;
        self
    }
}

/// Result of a minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder–Mead on a box. Candidate vertices are clamped into `bounds`
/// before evaluation; non-finite objective values count as `+∞`.
pub fn nelder_mead<F>(f: &mut F, x0: &[f64], bounds: &Bounds, max_evals: usize) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &mut Vec<f64>, evals: &mut usize| -> f64 {
        bounds.clamp(x);
        *evals += 1;
        let v = f(x);
        if v.is_finite() { v } else { f64::INFINITY }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    let v0 = eval(&mut start, &mut evals);
    simplex.push((start.clone(), v0));
    for j in 0..n {
        let mut v = start.clone();
        let (lo, hi) = bounds.interval(j);
        let step = 0.1 * (hi - lo);
        v[j] = if v[j] + step <= hi { v[j] + step } else { v[j] - step };
        let fv = eval(&mut v, &mut evals);
        simplex.push((v, fv));
    }

    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= 1e-12 * (1.0 + best.abs()) && simplex_size(&simplex) < 1e-9 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (v, _) in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
        };
        let mut reflected = along(-1.0);
        let fr = eval(&mut reflected, &mut evals);
        if fr < simplex[0].1 {
            let mut expanded = along(-2.0);
            let fe = eval(&mut expanded, &mut evals);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let (mut contracted, outside) = if fr < worst { (along(-0.5), true) } else { (along(0.5), false) };
            let fc = eval(&mut contracted, &mut evals);
            if (outside && fc <= fr) || (!outside && fc < worst) {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for (v, fv) in simplex.iter_mut().skip(1) {
                    for (x, a) in v.iter_mut().zip(&anchor) {
                        *x = a + 0.5 * (*x - a);
                    }
                    *fv = eval(v, &mut evals);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    Minimum { x, value, evaluations: evals }
}

fn simplex_size(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let first = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(v, _)| v.iter().zip(first).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max)
}

/// Minimizes `f` from `search.restarts` starts: the warm start (if any)
/// followed by Latin-hypercube draws in `bounds`. Ties keep the earliest
/// start, so the result is a deterministic function of `search.seed`.
pub fn multistart_minimize<F>(f: &mut F, bounds: &Bounds, search: &HyperSearch) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let restarts = search.restarts.max(1);
    let draws = latin_hypercube(restarts, bounds, &mut rng::keyed_rng(search.seed, &[0x5eed]));
    let mut best: Option<Minimum> = None;
    let mut total = 0;
    for s in 0..restarts {
        let start = match (&search.warm_start, s) {
            (Some(w), 0) if w.len() == bounds.dim() => w.clone(),
            _ => draws.row(s).to_vec(),
        };
        let m = nelder_mead(f, &start, bounds, search.evals_per_start);
        total += m.evaluations;
        if best.as_ref().is_none_or(|b| m.value < b.value) {
            best = Some(m);
        }
    }
    let mut best = best.expect("at least one start");
    best.evaluations = total;
    best
}
