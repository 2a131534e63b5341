//! The BO loop with scheduled outlier filtering, plus the comparison modes.
//!
//! In [`BoMode::Filtered`], every scheduled iteration fits the Student-t
//! Laplace GP on all points, classifies them, and fits the Gaussian GP on
//! the inliers only. On unscheduled iterations, and whenever the
//! half-points safeguard fires, the Gaussian GP sees every point (unless
//! [`BoConfig::persist_mask`] keeps the last classification). Expected
//! improvement on that Gaussian GP picks the next point.

use alloc::vec;
use alloc::vec::Vec;

use crate::acquisition::{maximize_acquisition, AcquisitionConfig};
use crate::dataset::Dataset;
use crate::design::initial_design;
use crate::error::{Error, Result};
use crate::gp_gaussian::{GaussianGp, GpHypers};
use crate::kernels::{KernelFamily, KernelParams};
use crate::laplace::{StudentTGp, StudentTLik, DEFAULT_DOF};
use crate::optimize::{Bounds, HyperSearch};
use crate::outliers::{classify_outliers, schedule_says_filter, FilterConfig};
use crate::rng::{derive_seed, splitmix64, stream};
use crate::surrogate::SurrogateModel;
use crate::t_process::{TProcess, TProcessParams, DEFAULT_RATE, DEFAULT_SHAPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoMode {
    /// Scheduled Student-t diagnosis, Gaussian GP on inliers.
    Filtered,
    /// Student-t Laplace GP on every point, no rejection.
    TLikelihoodOnly,
    /// Student-t process on every point, no rejection.
    TProcessOnly,
    /// Gaussian GP on every point.
    Baseline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoConfig {
    /// Total number of evaluations `T`, initial design included.
    pub budget: usize,
    /// Size `p` of the Latin-hypercube initial design.
    pub init_count: usize,
    pub bounds: Bounds,
    pub mode: BoMode,
    pub filter: FilterConfig,
    pub seed: u64,
    /// Reuse the last classification on unscheduled iterations instead of
    /// fitting on every point.
    pub persist_mask: bool,
    pub kernel_family: KernelFamily,
    pub hyper_restarts: usize,
    pub hyper_evals_per_start: usize,
    pub acquisition: AcquisitionConfig,
    pub student_t_dof: f64,
    pub tprocess_shape: f64,
    pub tprocess_rate: f64,
}

impl BoConfig {
    pub fn new(budget: usize, bounds: Bounds, mode: BoMode, seed: u64) -> Self {
        BoConfig {
            budget,
            init_count: 10,
            bounds,
            mode,
            filter: FilterConfig::default(),
            seed,
            persist_mask: false,
            kernel_family: KernelFamily::Matern52,
            hyper_restarts: 5,
            hyper_evals_per_start: 200,
            acquisition: AcquisitionConfig::default(),
            student_t_dof: DEFAULT_DOF,
            tprocess_shape: DEFAULT_SHAPE,
            tprocess_rate: DEFAULT_RATE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.init_count < 2 {
            return Err(Error::InvalidParameter("initial design needs at least 2 points"));
        }
        if self.budget < self.init_count {
            return Err(Error::InvalidParameter("budget must be at least the initial design size"));
        }
        if self.hyper_restarts == 0 || self.hyper_evals_per_start == 0 {
            return Err(Error::InvalidParameter("hyperparameter search needs a positive budget"));
        }
        StudentTLik::new(self.student_t_dof, 1.0)?;
        let k = KernelParams::isotropic(self.kernel_family, self.bounds.dim(), 1.0, 1.0)?;
        TProcessParams::new(k, 0.0, self.tprocess_shape, self.tprocess_rate)?;
        Ok(())
    }

    fn search(&self, stream_id: u64, iteration: usize, warm: Option<Vec<f64>>) -> HyperSearch {
        HyperSearch {
            restarts: self.hyper_restarts,
            evals_per_start: self.hyper_evals_per_start,
            seed: derive_seed(self.seed, &[stream_id, iteration as u64]),
            warm_start: warm,
        }
    }
}

/// One objective evaluation as seen by the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub observed: f64,
    /// Set by benchmark objectives that inject outliers.
    pub injected_outlier: Option<bool>,
    /// Outlier-free value, when the objective knows it.
    pub true_value: Option<f64>,
}

pub trait Objective {
    /// Evaluates the black box at `x` for 1-based `iteration`.
    fn evaluate(&mut self, iteration: usize, x: &[f64]) -> Evaluation;
}

impl<F: FnMut(&[f64]) -> f64> Objective for F {
    fn evaluate(&mut self, _iteration: usize, x: &[f64]) -> Evaluation {
        Evaluation { observed: self(x), injected_outlier: None, true_value: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// 1-based evaluation index.
    pub iteration: usize,
    pub x: Vec<f64>,
    pub y_observed: f64,
    pub injected_outlier: Option<bool>,
    pub true_value: Option<f64>,
    /// Hash of the inlier mask the surrogate was trained with (0 during the
    /// initial design).
    pub mask_digest: u64,
    /// Points the surrogate that proposed `x` was trained on.
    pub training_size: usize,
    pub scheduled: bool,
    pub reverted: bool,
    /// Smallest observed value so far.
    pub y_star_so_far: f64,
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub records: Vec<RunRecord>,
    /// Mask from the most recent classification, padded with inliers.
    pub final_mask: Vec<bool>,
    /// Points excluded by at least one classification.
    pub ever_masked: Vec<bool>,
    pub classifications: usize,
    /// Sum over classifications of points scored / points masked.
    pub scored_slots: usize,
    pub masked_slots: usize,
    /// Set when the run stopped early.
    pub abort: Option<Error>,
}

impl RunLog {
    pub fn best(&self) -> Option<&RunRecord> {
        self.records.iter().min_by(|a, b| a.y_observed.total_cmp(&b.y_observed))
    }

    pub fn is_complete(&self) -> bool {
        self.abort.is_none()
    }
}

fn mask_digest(mask: &[bool]) -> u64 {
    mask.iter().fold(splitmix64(mask.len() as u64), |h, m| splitmix64(h ^ (*m as u64 + 1)))
}

/// Runs BO without a clock (`wall_time` is 0 in every record).
pub fn run_bo<O: Objective + ?Sized>(objective: &mut O, cfg: &BoConfig) -> Result<RunLog> {
    run_bo_timed(objective, cfg, &mut || 0.0)
}

/// Runs BO, stamping each record with `clock()`. Only invalid
/// configurations return `Err`; failures during the run end it early with
/// [`RunLog::abort`] set.
pub fn run_bo_timed<O: Objective + ?Sized>(
    objective: &mut O,
    cfg: &BoConfig,
    clock: &mut dyn FnMut() -> f64,
) -> Result<RunLog> {
    cfg.validate()?;
    let d = cfg.bounds.dim();
    let mut log = RunLog {
        records: Vec::with_capacity(cfg.budget),
        final_mask: Vec::new(),
        ever_masked: Vec::new(),
        classifications: 0,
        scored_slots: 0,
        masked_slots: 0,
        abort: None,
    };
    let mut data = Dataset::empty(d);
    let mut y_best = f64::INFINITY;

    let mut observe = |iteration: usize,
                       x: &[f64],
                       data: &mut Dataset,
                       log: &mut RunLog,
                       meta: (u64, usize, bool, bool),
                       clock: &mut dyn FnMut() -> f64|
     -> bool {
        let e = objective.evaluate(iteration, x);
        if !e.observed.is_finite() {
            log.abort = Some(Error::NonFiniteObjective { iteration, value: e.observed });
            return false;
        }
        data.push(x, e.observed).expect("dimension checked by bounds");
        y_best = y_best.min(e.observed);
        log.ever_masked.push(false);
        log.records.push(RunRecord {
            iteration,
            x: x.to_vec(),
            y_observed: e.observed,
            injected_outlier: e.injected_outlier,
            true_value: e.true_value,
            mask_digest: meta.0,
            training_size: meta.1,
            scheduled: meta.2,
            reverted: meta.3,
            y_star_so_far: y_best,
            wall_time: clock(),
        });
        true
    };

    let design = initial_design(cfg.init_count, &cfg.bounds, cfg.seed);
    for (i, x) in design.row_iter().enumerate() {
        if !observe(i + 1, x, &mut data, &mut log, (0, 0, false, false), clock) {
            log.final_mask = vec![true; data.len()];
            return Ok(log);
        }
    }

    let widths: Vec<f64> = (0..d).map(|j| 0.25 * cfg.bounds.width(j)).collect();
    let kernel0 = KernelParams::new(cfg.kernel_family, widths, 1.0)?;
    let gauss0 = GpHypers::new(kernel0.clone(), 1e-3)?;
    let lik0 = StudentTLik::new(cfg.student_t_dof, 0.1)?;
    let tp0 = TProcessParams::new(kernel0.clone(), 1e-3, cfg.tprocess_shape, cfg.tprocess_rate)?;
    let mut warm_gauss: Option<Vec<f64>> = None;
    let mut warm_robust: Option<Vec<f64>> = None;
    let mut warm_tp: Option<Vec<f64>> = None;
    let mut last_mask: Option<Vec<bool>> = None;

    for iteration in cfg.init_count + 1..=cfg.budget {
        let n = data.len();
        let mut scheduled = false;
        let mut reverted = false;
        data.clear_mask();

        let fitted: Result<SurrogateModel> = (|| match cfg.mode {
            BoMode::Filtered => {
                if schedule_says_filter(n, &cfg.filter) {
                    scheduled = true;
                    let search = cfg.search(stream::HYPER_STUDENT_T, iteration, warm_robust.take());
                    let robust = StudentTGp::fit(&data, &kernel0, &lik0, Some(&search))?;
                    warm_robust = Some(robust.to_log_vector());
                    let report = classify_outliers(&data, &robust, &cfg.filter)?;
                    reverted = report.reverted;
                    log.classifications += 1;
                    log.scored_slots += n;
                    log.masked_slots += report.n_outliers;
                    for (e, m) in log.ever_masked.iter_mut().zip(&report.inlier_mask) {
                        *e |= !m;
                    }
                    data.set_mask(&report.inlier_mask)?;
                    last_mask = Some(report.inlier_mask);
                } else if cfg.persist_mask {
                    if let Some(m) = &last_mask {
                        let mut mask = m.clone();
                        mask.resize(n, true);
                        data.set_mask(&mask)?;
                    }
                }
                let search = cfg.search(stream::HYPER_GAUSSIAN, iteration, warm_gauss.take());
                let gp = GaussianGp::fit(&data, &gauss0, Some(&search))?;
                warm_gauss = Some(gp.hypers().to_log_vector());
                Ok(SurrogateModel::Gaussian(gp))
            }
            BoMode::Baseline => {
                let search = cfg.search(stream::HYPER_GAUSSIAN, iteration, warm_gauss.take());
                let gp = GaussianGp::fit(&data, &gauss0, Some(&search))?;
                warm_gauss = Some(gp.hypers().to_log_vector());
                Ok(SurrogateModel::Gaussian(gp))
            }
            BoMode::TLikelihoodOnly => {
                let search = cfg.search(stream::HYPER_STUDENT_T, iteration, warm_robust.take());
                let robust = StudentTGp::fit(&data, &kernel0, &lik0, Some(&search))?;
                warm_robust = Some(robust.to_log_vector());
                Ok(SurrogateModel::StudentT(robust))
            }
            BoMode::TProcessOnly => {
                let search = cfg.search(stream::HYPER_TPROCESS, iteration, warm_tp.take());
                let tp = TProcess::fit(&data, &tp0, Some(&search))?;
                warm_tp = Some(tp.params().to_log_vector());
                Ok(SurrogateModel::TProcess(tp))
            }
        })();

        let model = match fitted {
            Ok(m) => m,
            Err(e) => {
                log.abort = Some(e);
                break;
            }
        };
        let training_size = data.inlier_count();
        let digest = mask_digest(data.mask());
        let (_, y_star) = data.best_inlier().expect("at least one inlier");
        let acq_seed = derive_seed(cfg.seed, &[stream::ACQUISITION, iteration as u64]);
        let x = maximize_acquisition(&model, y_star, &cfg.bounds, &cfg.acquisition, acq_seed);
        if !observe(iteration, &x, &mut data, &mut log, (digest, training_size, scheduled, reverted), clock) {
            break;
        }
    }

    let mut final_mask = last_mask.unwrap_or_default();
    final_mask.resize(data.len(), true);
    log.final_mask = final_mask;
    Ok(log)
}
