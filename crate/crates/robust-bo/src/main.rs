use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use robust_bo::classify::{classify_dataset, read_dataset, write_report, ClassifyOptions};
use robust_bo::config::ExperimentConfig;
use robust_bo::harness::run_experiment;
use robust_bo::output::write_outputs;
use robust_bo_core::FilterConfig;

const EXIT_INVALID: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "robust-bo", version, about = "Outlier-robust Bayesian optimization benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark experiment and write CSV results.
    Run(RunArgs),
    /// Label each row of a CSV dataset as inlier or outlier.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment configuration (built-in defaults when omitted).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for independent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Master seed (overrides the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` overrides with dotted keys, e.g. `filter.alpha=0.1`.
    overrides: Vec<String>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// CSV with header x_0,..,x_{d-1},y.
    dataset: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Student-t degrees of freedom.
    #[arg(long, default_value_t = robust_bo_core::laplace::DEFAULT_DOF)]
    dof: f64,
    /// Initial lengthscale as a fraction of each input's span.
    #[arg(long, default_value_t = 0.25)]
    lengthscale: f64,
    #[arg(long, default_value_t = 1.0)]
    signal_variance: f64,
    /// Initial Student-t scale.
    #[arg(long, default_value_t = 0.1)]
    scale: f64,
    /// Keep the given hyperparameters instead of maximizing the evidence.
    #[arg(long)]
    no_optimize: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn cmd_run(args: RunArgs) -> ExitCode {
    let mut overrides = args.overrides;
    if let Some(s) = args.seed {
        overrides.push(format!("seed={s}"));
    }
    if let Some(o) = &args.out {
        overrides.push(format!("output_dir={:?}", o.display().to_string()));
    }
    let cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path, &overrides),
        None => ExperimentConfig::parse("", &overrides),
    };
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let result = match run_experiment(&cfg, args.jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = write_outputs(&cfg.output_dir, &cfg, &result) {
        eprintln!("error: writing {}: {e}", cfg.output_dir.display());
        return ExitCode::FAILURE;
    }
    if !result.is_complete() {
        eprintln!("error: numerical failure; see {}", cfg.output_dir.join(robust_bo::output::MANIFEST).display());
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}

fn cmd_classify(args: ClassifyArgs) -> ExitCode {
    let file = match std::fs::File::open(&args.dataset) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {}: {e}", args.dataset.display());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let data = match read_dataset(file) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {}: {e}", args.dataset.display());
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let filter = match FilterConfig::new(args.alpha, 1, 1) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: --alpha: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let opts = ClassifyOptions {
        filter,
        dof: args.dof,
        lengthscale_fraction: args.lengthscale,
        signal_variance: args.signal_variance,
        scale: args.scale,
        optimize: !args.no_optimize,
        seed: args.seed,
    };
    let report = match classify_dataset(&data, &opts) {
        Ok(r) => r,
        Err(e @ robust_bo_core::Error::NumericalFailure(_)) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_NUMERICAL);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    if let Err(e) = write_report(&mut lock, &report).map_err(io::Error::other).and_then(|_| lock.flush()) {
        eprintln!("error: {e}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(a) => cmd_run(a),
        Command::Classify(a) => cmd_classify(a),
    }
}
