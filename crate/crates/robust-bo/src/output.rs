//! Result files. Every float is written with Rust's shortest round-trip
//! formatting, and nothing time-dependent is recorded, so identical runs
//! produce identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::harness::{run_label, ExperimentResult, RunResult};

pub const SNAPSHOT: &str = "config.snapshot.toml";
pub const MANIFEST: &str = "MANIFEST";
pub const FUNCTIONS: &str = "functions.csv";

pub fn run_file(run: &RunResult) -> PathBuf {
    Path::new("runs").join(format!("{}_trial{}.csv", run.label(), run.trial))
}

pub fn summary_file(label: &str) -> PathBuf {
    Path::new("summary").join(format!("{label}.csv"))
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// `iteration,x_0..x_{d-1},y_observed,was_outlier,is_masked,y_star_true`
pub fn write_run<W: io::Write>(out: W, run: &RunResult, dim: usize) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string()];
    header.extend((0..dim).map(|j| format!("x_{j}")));
    header.extend(["y_observed", "was_outlier", "is_masked", "y_star_true"].map(String::from));
    w.write_record(&header)?;
    for (i, r) in run.log.records.iter().enumerate() {
        let mut row = vec![r.iteration.to_string()];
        row.extend(r.x.iter().map(f64::to_string));
        row.push(r.y_observed.to_string());
        row.push(flag(r.injected_outlier.unwrap_or(false)).to_string());
        row.push(flag(!run.log.final_mask.get(i).copied().unwrap_or(true)).to_string());
        row.push(run.y_star_true[i].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> io::Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(io::Error::other)?;
    Ok(buf)
}

/// Writes the snapshot, per-run and summary CSVs, `functions.csv` and the
/// manifest under `dir`. Returns the relative paths written.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = vec![PathBuf::from(SNAPSHOT)];
    write_file(&dir.join(SNAPSHOT), cfg.snapshot().as_bytes())?;

    for run in &result.runs {
        let rel = run_file(run);
        let bytes = csv_bytes(|buf| write_run(buf, run, cfg.objective.dim))?;
        write_file(&dir.join(&rel), &bytes)?;
        written.push(rel);
    }

    for ((mode, rate), rows) in &result.summaries {
        let rel = summary_file(&run_label(*mode, *rate));
        let bytes = csv_bytes(|buf| {
            let mut w = csv::Writer::from_writer(buf);
            w.write_record(["iteration", "mean_regret", "ci_halfwidth"])?;
            for r in rows {
                w.write_record([r.iteration.to_string(), r.mean_regret.to_string(), r.ci_halfwidth.to_string()])?;
            }
            w.flush()?;
            Ok(())
        })?;
        write_file(&dir.join(&rel), &bytes)?;
        written.push(rel);
    }

    let bytes = csv_bytes(|buf| {
        let mut w = csv::Writer::from_writer(buf);
        w.write_record(["trial", "seed", "grid_min", "f_min"])?;
        for f in &result.functions {
            w.write_record([f.trial.to_string(), f.seed.to_string(), f.grid_min.to_string(), f.f_min.to_string()])?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_file(&dir.join(FUNCTIONS), &bytes)?;
    written.push(PathBuf::from(FUNCTIONS));

    let mut manifest = String::new();
    manifest.push_str(if result.is_complete() { "status = complete\n" } else { "status = incomplete\n" });
    for (trial, why) in &result.function_failures {
        manifest.push_str(&format!("failed trial {trial}: {why}\n"));
    }
    for run in result.runs.iter().filter(|r| r.failure.is_some()) {
        manifest.push_str(&format!(
            "failed {} after {} of {} evaluations: {}\n",
            run_file(run).display(),
            run.log.records.len(),
            cfg.budget,
            run.failure.as_deref().unwrap_or_default()
        ));
    }
    for p in &written {
        manifest.push_str(&format!("{}\n", p.display()));
    }
    write_file(&dir.join(MANIFEST), manifest.as_bytes())?;
    written.push(PathBuf::from(MANIFEST));
    Ok(written)
}
