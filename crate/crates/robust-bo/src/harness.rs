//! The synthetic benchmark: GP-sampled objectives, outlier injection with
//! common random numbers, and per-iteration regret statistics.
//!
//! Every trial owns a seed derived from the master seed. The objective,
//! initial design, outliers and hyperparameter searches of all modes in a
//! trial are keyed on it, so the modes differ only in what they do with the
//! data. Runs are independent, which makes parallel execution bit-identical
//! to sequential.

use rayon::prelude::*;
use robust_bo_core::design::latin_hypercube;
use robust_bo_core::engine::{run_bo, Evaluation, Objective, RunLog};
use robust_bo_core::rng::{self, derive_seed, stream};
use robust_bo_core::{corrupt, Error, OutlierModel, SyntheticObjective};

use crate::config::{ExperimentConfig, Mode};

pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[stream::TRIAL, trial as u64])
}

/// The objective of one trial, pinned to its anchors and not yet queried
/// by any run.
#[derive(Debug, Clone)]
pub struct TrialFunction {
    pub trial: usize,
    pub seed: u64,
    pub objective: SyntheticObjective,
    /// Smallest anchored mean over the regret grid.
    pub grid_min: f64,
}

pub fn build_function(cfg: &ExperimentConfig, trial: usize) -> robust_bo_core::Result<TrialFunction> {
    let seed = trial_seed(cfg.seed, trial);
    let bounds = cfg.bounds()?;
    let mut objective = SyntheticObjective::new(&cfg.generator_kernel()?, derive_seed(seed, &[stream::FUNCTION]));
    objective.anchor(&bounds, cfg.objective.anchors)?;
    let grid = latin_hypercube(cfg.objective.regret_grid, &bounds, &mut rng::keyed_rng(seed, &[stream::REGRET_GRID]));
    let grid_min = grid.row_iter().map(|x| objective.conditional_mean(x)).fold(f64::INFINITY, f64::min);
    Ok(TrialFunction { trial, seed, objective, grid_min })
}

/// Black box seen by the engine: the sample path, corrupted per
/// `(trial seed, iteration)`.
struct BenchObjective {
    f: SyntheticObjective,
    outliers: Option<OutlierModel>,
    trial_seed: u64,
    failure: Option<Error>,
}

impl Objective for BenchObjective {
    fn evaluate(&mut self, iteration: usize, x: &[f64]) -> Evaluation {
        match self.f.query(x) {
            Ok(v) => {
                let (observed, was) = match &self.outliers {
                    Some(m) => corrupt(v, m, iteration, self.trial_seed),
                    None => (v, false),
                };
                Evaluation { observed, injected_outlier: Some(was), true_value: Some(v) }
            }
            Err(e) => {
                self.failure = Some(e);
                Evaluation { observed: f64::NAN, injected_outlier: None, true_value: None }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub mode: Mode,
    pub rate: f64,
    pub trial: usize,
    pub log: RunLog,
    /// Running minimum of the true objective over the queried points.
    pub y_star_true: Vec<f64>,
    /// Why the run stopped early, if it did.
    pub failure: Option<String>,
}

impl RunResult {
    pub fn label(&self) -> String {
        run_label(self.mode, self.rate)
    }
}

pub fn run_label(mode: Mode, rate: f64) -> String {
    format!("{}_rho{}", mode.name(), rate)
}

/// Runs `mode` at outlier rate `rate` on a fresh copy of `func`.
pub fn run_single(cfg: &ExperimentConfig, func: &TrialFunction, mode: Mode, rate: f64) -> RunResult {
    let outliers = if mode.injects_outliers() && rate > 0.0 {
        Some(OutlierModel::with_range(rate, cfg.outlier_low, cfg.outlier_high).expect("validated rate and range"))
    } else {
        None
    };
    let mut obj = BenchObjective { f: func.objective.clone(), outliers, trial_seed: func.seed, failure: None };
    let bo = cfg.bo_config(mode, func.seed);
    let (log, mut failure) = match run_bo(&mut obj, &bo) {
        Ok(log) => {
            let reason = log.abort.as_ref().map(|e| e.to_string());
            (log, reason)
        }
        Err(e) => (
            RunLog {
                records: Vec::new(),
                final_mask: Vec::new(),
                ever_masked: Vec::new(),
                classifications: 0,
                scored_slots: 0,
                masked_slots: 0,
                abort: Some(e.clone()),
            },
            Some(e.to_string()),
        ),
    };
    if let Some(e) = obj.failure {
        failure = Some(format!("objective: {e}"));
    }
    let mut best = f64::INFINITY;
    let y_star_true = log
        .records
        .iter()
        .map(|r| {
            best = best.min(r.true_value.unwrap_or(f64::INFINITY));
            best
        })
        .collect();
    RunResult { mode, rate, trial: func.trial, log, y_star_true, failure }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionSummary {
    pub trial: usize,
    pub seed: u64,
    pub grid_min: f64,
    /// Minimum estimate used for regret: the grid estimate or any true value
    /// seen by any run of the trial, whichever is lower.
    pub f_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub iteration: usize,
    pub mean_regret: f64,
    /// `1.96 · sd / √n` across trials (0 for a single trial).
    pub ci_halfwidth: f64,
    /// Trials that reached this iteration.
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub functions: Vec<FunctionSummary>,
    /// In `(mode, rate, trial)` order of the configuration.
    pub runs: Vec<RunResult>,
    /// Keyed by `(mode, rate)` in configuration order.
    pub summaries: Vec<((Mode, f64), Vec<SummaryRow>)>,
    /// Trials whose objective could not be built.
    pub function_failures: Vec<(usize, String)>,
}

impl ExperimentResult {
    pub fn is_complete(&self) -> bool {
        self.function_failures.is_empty() && self.runs.iter().all(|r| r.failure.is_none())
    }

    pub fn summary(&self, mode: Mode, rate: f64) -> Option<&[SummaryRow]> {
        self.summaries.iter().find(|((m, r), _)| *m == mode && *r == rate).map(|(_, rows)| rows.as_slice())
    }

    /// Mean regret at the last iteration of `(mode, rate)`.
    pub fn final_regret(&self, mode: Mode, rate: f64) -> Option<f64> {
        self.summary(mode, rate)?.last().map(|r| r.mean_regret)
    }

    pub fn regret_curve(&self, run: &RunResult) -> Vec<f64> {
        let f_min = self.functions.iter().find(|f| f.trial == run.trial).map_or(0.0, |f| f.f_min);
        run.y_star_true.iter().map(|y| y - f_min).collect()
    }
}

/// `(mode, rate)` pairs in run order; the clean mode runs once at rate 0.
pub fn run_keys(cfg: &ExperimentConfig) -> Vec<(Mode, f64)> {
    let mut keys = Vec::new();
    for &mode in &cfg.modes {
        if mode.injects_outliers() {
            keys.extend(cfg.outlier_rates.iter().map(|r| (mode, *r)));
        } else {
            keys.push((mode, 0.0));
        }
    }
    keys
}

pub fn mean_and_halfwidth(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Runs every `(mode, rate, trial)` of `cfg` on a pool of `jobs` threads.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult, rayon::ThreadPoolBuildError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    Ok(pool.install(|| run_experiment_in_pool(cfg)))
}

fn run_experiment_in_pool(cfg: &ExperimentConfig) -> ExperimentResult {
    let built: Vec<(usize, robust_bo_core::Result<TrialFunction>)> =
        (0..cfg.trials).into_par_iter().map(|t| (t, build_function(cfg, t))).collect();
    let mut funcs = Vec::new();
    let mut function_failures = Vec::new();
    for (t, f) in built {
        match f {
            Ok(f) => funcs.push(f),
            Err(e) => function_failures.push((t, e.to_string())),
        }
    }

    let keys = run_keys(cfg);
    let tasks: Vec<(Mode, f64, &TrialFunction)> =
        keys.iter().flat_map(|&(m, r)| funcs.iter().map(move |f| (m, r, f))).collect();
    let runs: Vec<RunResult> = tasks.par_iter().map(|&(m, r, f)| run_single(cfg, f, m, r)).collect();

    let functions: Vec<FunctionSummary> = funcs
        .iter()
        .map(|f| {
            let seen = runs
                .iter()
                .filter(|r| r.trial == f.trial)
                .flat_map(|r| r.y_star_true.last().copied())
                .fold(f64::INFINITY, f64::min);
            FunctionSummary { trial: f.trial, seed: f.seed, grid_min: f.grid_min, f_min: f.grid_min.min(seen) }
        })
        .collect();

    let mut result = ExperimentResult { functions, runs, summaries: Vec::new(), function_failures };
    for &(mode, rate) in &keys {
        let curves: Vec<Vec<f64>> = result
            .runs
            .iter()
            .filter(|r| r.mode == mode && r.rate == rate)
            .map(|r| result.regret_curve(r))
            .collect();
        let len = curves.iter().map(Vec::len).max().unwrap_or(0);
        let rows = (0..len)
            .map(|i| {
                let vals: Vec<f64> = curves.iter().filter_map(|c| c.get(i).copied()).collect();
                let (mean_regret, ci_halfwidth) = mean_and_halfwidth(&vals);
                SummaryRow { iteration: i + 1, mean_regret, ci_halfwidth, trials: vals.len() }
            })
            .collect();
        result.summaries.push(((mode, rate), rows));
    }
    result
}
