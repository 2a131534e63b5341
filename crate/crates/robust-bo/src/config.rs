//! Experiment configuration: a strict TOML schema whose defaults are all
//! materialized before a run, so the written snapshot reproduces it alone.

use std::fmt;
use std::path::{Path, PathBuf};

use robust_bo_core::engine::{BoConfig, BoMode};
use robust_bo_core::rng;
use robust_bo_core::{AcquisitionConfig, Bounds, FilterConfig, KernelFamily, KernelParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("override `{0}` is not of the form key=value")]
    Override(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: &'static str, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Filtered,
    TLikelihood,
    TProcess,
    Baseline,
    /// Baseline BO on the clean objective (no injection at any rate).
    NoOutliers,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Filtered, Mode::TLikelihood, Mode::TProcess, Mode::Baseline, Mode::NoOutliers];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Filtered => "filtered",
            Mode::TLikelihood => "t-likelihood",
            Mode::TProcess => "t-process",
            Mode::Baseline => "baseline",
            Mode::NoOutliers => "no-outliers",
        }
    }

    pub fn bo_mode(self) -> BoMode {
        match self {
            Mode::Filtered => BoMode::Filtered,
            Mode::TLikelihood => BoMode::TLikelihoodOnly,
            Mode::TProcess => BoMode::TProcessOnly,
            Mode::Baseline | Mode::NoOutliers => BoMode::Baseline,
        }
    }

    pub fn injects_outliers(self) -> bool {
        self != Mode::NoOutliers
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    Matern52,
    RationalQuadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ObjectiveSection {
    /// Generating kernel: `matern52` (within-model) or `rational-quadratic`.
    pub kernel: FamilyName,
    pub rq_alpha: f64,
    pub dim: usize,
    /// One `[low, high]` pair per dimension; `[0, 1]` each when omitted.
    pub bounds: Option<Vec<[f64; 2]>>,
    /// Generator lengthscales; `0.1 ×` box width when omitted.
    pub lengthscales: Option<Vec<f64>>,
    pub signal_variance: f64,
    /// Latin-hypercube points the sample path is pinned to before any run.
    pub anchors: usize,
    /// Latin-hypercube size for the estimate of the function minimum.
    pub regret_grid: usize,
}

impl Default for ObjectiveSection {
    fn default() -> Self {
        ObjectiveSection {
            kernel: FamilyName::Matern52,
            rq_alpha: 2.0,
            dim: 2,
            bounds: None,
            lengthscales: None,
            signal_variance: 1.0,
            anchors: 400,
            regret_grid: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterSection {
    pub alpha: f64,
    pub n_init: usize,
    pub n_s: usize,
    /// Keep the last classification on unscheduled iterations.
    pub persist_mask: bool,
}

impl Default for FilterSection {
    fn default() -> Self {
        let f = FilterConfig::default();
        FilterSection { alpha: f.alpha(), n_init: f.n_init(), n_s: f.n_s(), persist_mask: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurrogateSection {
    pub kernel: FamilyName,
    pub rq_alpha: f64,
    pub hyper_restarts: usize,
    pub hyper_evals_per_start: usize,
    pub candidates: usize,
    pub refine_top: usize,
    pub sweeps: usize,
    pub student_t_dof: f64,
    pub tprocess_shape: f64,
    pub tprocess_rate: f64,
}

impl Default for SurrogateSection {
    fn default() -> Self {
        let acq = AcquisitionConfig::default();
        SurrogateSection {
            kernel: FamilyName::Matern52,
            rq_alpha: 2.0,
            hyper_restarts: 5,
            hyper_evals_per_start: 200,
            candidates: acq.candidates,
            refine_top: acq.refine_top,
            sweeps: acq.sweeps,
            student_t_dof: robust_bo_core::laplace::DEFAULT_DOF,
            tprocess_shape: robust_bo_core::t_process::DEFAULT_SHAPE,
            tprocess_rate: robust_bo_core::t_process::DEFAULT_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub budget: usize,
    pub init_count: usize,
    pub modes: Vec<Mode>,
    pub outlier_rates: Vec<f64>,
    pub outlier_low: f64,
    pub outlier_high: f64,
    pub output_dir: PathBuf,
    /// Recorded so common random numbers are auditable; must match the
    /// build's generator when given.
    pub rng_algorithm: String,
    pub objective: ObjectiveSection,
    pub filter: FilterSection,
    pub surrogate: SurrogateSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            trials: 20,
            budget: 50,
            init_count: 10,
            modes: Mode::ALL.to_vec(),
            outlier_rates: vec![0.1, 0.2],
            outlier_low: 1.0,
            outlier_high: 2.0,
            output_dir: PathBuf::from("results"),
            rng_algorithm: rng::ALGORITHM.to_string(),
            objective: ObjectiveSection::default(),
            filter: FilterSection::default(),
            surrogate: SurrogateSection::default(),
        }
    }
}

fn invalid(key: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key, reason: reason.into() }
}

/// Sets `value` at a dotted `path` inside `table`, creating tables on the way.
fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| ConfigError::Override(path.to_string()))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| ConfigError::Parse(format!("`{p}` in override `{path}` is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses the right-hand side of an override as a TOML value, falling back
/// to a bare string (`modes=["baseline"]`, `trials=3`, `output_dir=out`).
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

impl ExperimentConfig {
    /// Parses `text` (strict: unknown keys are errors), applies `key=value`
    /// overrides, materializes defaults and validates.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        for o in overrides {
            let (k, v) = o.split_once('=').ok_or_else(|| ConfigError::Override(o.clone()))?;
            set_path(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        let mut cfg: ExperimentConfig = if overrides.is_empty() {
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
        } else {
            ExperimentConfig::deserialize(toml::Value::Table(table))
                .map_err(|e| ConfigError::Parse(format!("after overrides: {e}")))?
        };
        cfg.materialize();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, overrides).map_err(|e| match e {
            ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    fn materialize(&mut self) {
        let d = self.objective.dim;
        let bounds = self.objective.bounds.get_or_insert_with(|| vec![[0.0, 1.0]; d]).clone();
        self.objective
            .lengthscales
            .get_or_insert_with(|| bounds.iter().map(|[lo, hi]| 0.1 * (hi - lo)).collect());
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rng_algorithm != rng::ALGORITHM {
            return Err(invalid(
                "rng_algorithm",
                format!("this build uses `{}`, not `{}`", rng::ALGORITHM, self.rng_algorithm),
            ));
        }
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.init_count < 2 {
            return Err(invalid("init_count", "must be at least 2"));
        }
        if self.budget < self.init_count {
            return Err(invalid("budget", "must be at least init_count"));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "list at least one mode"));
        }
        let mut seen = self.modes.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.modes.len() {
            return Err(invalid("modes", "duplicate entry"));
        }
        if self.outlier_rates.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(invalid("outlier_rates", "every rate must lie in [0, 1]"));
        }
        if self.modes.iter().any(|m| m.injects_outliers()) && self.outlier_rates.is_empty() {
            return Err(invalid("outlier_rates", "list at least one rate"));
        }
        if !(self.outlier_low <= self.outlier_high) || !self.outlier_low.is_finite() || !self.outlier_high.is_finite() {
            return Err(invalid("outlier_low", "need finite outlier_low <= outlier_high"));
        }
        let o = &self.objective;
        if o.dim == 0 {
            return Err(invalid("objective.dim", "must be at least 1"));
        }
        let bounds = o.bounds.as_deref().unwrap_or_default();
        if bounds.len() != o.dim {
            return Err(invalid("objective.bounds", format!("need {} pairs, got {}", o.dim, bounds.len())));
        }
        if o.lengthscales.as_ref().is_some_and(|l| l.len() != o.dim) {
            return Err(invalid("objective.lengthscales", format!("need {} values", o.dim)));
        }
        self.bounds().map_err(|e| invalid("objective.bounds", e.to_string()))?;
        self.generator_kernel().map_err(|e| invalid("objective", e.to_string()))?;
        if o.regret_grid == 0 {
            return Err(invalid("objective.regret_grid", "must be at least 1"));
        }
        FilterConfig::new(self.filter.alpha, self.filter.n_init, self.filter.n_s)
            .map_err(|e| invalid("filter", e.to_string()))?;
        let s = &self.surrogate;
        if s.candidates == 0 {
            return Err(invalid("surrogate.candidates", "must be at least 1"));
        }
        if matches!(s.kernel, FamilyName::RationalQuadratic) && !(s.rq_alpha > 0.0) {
            return Err(invalid("surrogate.rq_alpha", "must be positive"));
        }
        self.bo_config(Mode::Filtered, 0).validate().map_err(|e| invalid("surrogate", e.to_string()))?;
        Ok(())
    }

    pub fn bounds(&self) -> robust_bo_core::Result<Bounds> {
        Bounds::new(self.objective.bounds.as_deref().unwrap_or_default().iter().map(|[a, b]| (*a, *b)).collect())
    }

    pub fn generator_kernel(&self) -> robust_bo_core::Result<KernelParams> {
        let o = &self.objective;
        let family = match o.kernel {
            FamilyName::Matern52 => KernelFamily::Matern52,
            FamilyName::RationalQuadratic => KernelFamily::RationalQuadratic { alpha: o.rq_alpha },
        };
        KernelParams::new(family, o.lengthscales.clone().unwrap_or_default(), o.signal_variance)
    }

    /// Engine configuration for one run of `mode` in trial `trial_seed`.
    pub fn bo_config(&self, mode: Mode, trial_seed: u64) -> BoConfig {
        let s = &self.surrogate;
        let bounds = self.bounds().unwrap_or_else(|_| Bounds::unit(self.objective.dim.max(1)));
        let mut cfg = BoConfig::new(self.budget, bounds, mode.bo_mode(), trial_seed);
        cfg.init_count = self.init_count;
        cfg.filter = FilterConfig::new(self.filter.alpha, self.filter.n_init, self.filter.n_s).unwrap_or_default();
        cfg.persist_mask = self.filter.persist_mask;
        cfg.kernel_family = match s.kernel {
            FamilyName::Matern52 => KernelFamily::Matern52,
            FamilyName::RationalQuadratic => KernelFamily::RationalQuadratic { alpha: s.rq_alpha },
        };
        cfg.hyper_restarts = s.hyper_restarts;
        cfg.hyper_evals_per_start = s.hyper_evals_per_start;
        cfg.acquisition = AcquisitionConfig { candidates: s.candidates, refine_top: s.refine_top, sweeps: s.sweeps };
        cfg.student_t_dof = s.student_t_dof;
        cfg.tprocess_shape = s.tprocess_shape;
        cfg.tprocess_rate = s.tprocess_rate;
        cfg
    }

    /// Fully resolved TOML, every default written out.
    pub fn snapshot(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}
