//! Standalone outlier diagnosis of a CSV dataset.

use std::io;

use robust_bo_core::{
    classify_outliers, ClassificationReport, Dataset, FilterConfig, HyperSearch, KernelParams, StudentTGp, StudentTLik,
};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("header must be x_0,..,x_{{d-1}},y; found `{0}`")]
    Header(String),
    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },
    #[error("no data rows")]
    Empty,
}

/// Reads `x_0,..,x_{d-1},y` with at least one input column.
pub fn read_dataset<R: io::Read>(input: R) -> Result<Dataset, InputError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let d = header.len().saturating_sub(1);
    let expected: Vec<String> = (0..d).map(|j| format!("x_{j}")).chain(["y".to_string()]).collect();
    if d == 0 || header != expected {
        return Err(InputError::Header(header.join(",")));
    }
    let mut data = Dataset::empty(d);
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| InputError::Row { row, reason: format!("`{s}`: {e}") }))
            .collect::<Result<Vec<f64>, _>>()?;
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(InputError::Row { row, reason: "non-finite value".into() });
        }
        data.push(&vals[..d], vals[d]).map_err(|e| InputError::Row { row, reason: e.to_string() })?;
    }
    if data.is_empty() {
        return Err(InputError::Empty);
    }
    Ok(data)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifyOptions {
    pub filter: FilterConfig,
    pub dof: f64,
    /// Initial (or, without `optimize`, fixed) kernel lengthscale as a
    /// fraction of each input's span.
    pub lengthscale_fraction: f64,
    pub signal_variance: f64,
    pub scale: f64,
    pub optimize: bool,
    pub seed: u64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            filter: FilterConfig::default(),
            dof: robust_bo_core::laplace::DEFAULT_DOF,
            lengthscale_fraction: 0.25,
            signal_variance: 1.0,
            scale: 0.1,
            optimize: true,
            seed: 0,
        }
    }
}

/// Fits the Student-t GP on every point and classifies each one.
pub fn classify_dataset(data: &Dataset, opts: &ClassifyOptions) -> robust_bo_core::Result<ClassificationReport> {
    let ls = data.input_span().iter().map(|s| opts.lengthscale_fraction * s).collect();
    let kernel = KernelParams::matern52(ls, opts.signal_variance)?;
    let lik = StudentTLik::new(opts.dof, opts.scale)?;
    let search = HyperSearch::new(opts.seed);
    let model = StudentTGp::fit(data, &kernel, &lik, opts.optimize.then_some(&search))?;
    classify_outliers(data, &model, &opts.filter)
}

/// `row,label,score` with 1-based rows.
pub fn write_report<W: io::Write>(out: W, report: &ClassificationReport) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "label", "score"])?;
    for (i, (inlier, score)) in report.inlier_mask.iter().zip(&report.scores).enumerate() {
        let label = if *inlier { "inlier" } else { "outlier" };
        w.write_record([(i + 1).to_string(), label.to_string(), score.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
