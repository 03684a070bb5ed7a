use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mvk::exec::Execution;
use mvk::experiments::commands::{self, BoundArgs};
use mvk::experiments::config::ShapeSource;
use mvk::experiments::output::{write_artifacts, Artifact};
use mvk::experiments::ExperimentConfig;
use mvk::interpolation::{CholeskyFallback, FitOptions};
use mvk::{Error, Result};

#[derive(Parser)]
#[command(name = "mvk", version, about = "Matrix-valued kernel interpolation and error bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: `output_dir` from the config, else `out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run every parallel section on the calling thread.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fallback {
    Error,
    Lu,
    Pinv,
}

#[derive(Subcommand)]
enum Command {
    /// Error decay of four kernels on a three-component target.
    Example1 {
        #[command(flatten)]
        common: Common,
        /// Run a fresh shape grid search instead of the tabulated shapes.
        #[arg(long)]
        tune: bool,
    },
    /// Measured errors against power-function bounds on nested center sets.
    Example2 {
        #[command(flatten)]
        common: Common,
    },
    /// Spectrum of the pointwise square of a two-term kernel.
    Counterexample {
        #[command(flatten)]
        common: Common,
    },
    /// Rank structure and orthogonal recovery of a kernel decomposition.
    Analyze {
        /// Kernel file (TOML with `[[terms]]`).
        kernel: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit an interpolant to tabulated data.
    Fit {
        /// CSV with columns x_1..x_d, f_1..f_m.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        kernel: PathBuf,
        #[arg(long, value_enum, default_value = "error")]
        fallback: Fallback,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a fitted model at the points of a CSV file.
    Eval {
        #[arg(long)]
        model: PathBuf,
        /// CSV with columns x_1..x_d; other columns are ignored.
        #[arg(long)]
        points: PathBuf,
        /// Append the three pointwise bound columns.
        #[arg(long)]
        bounds: bool,
        /// Native-space norm of `f − Πf` used to scale the bounds.
        #[arg(long, default_value_t = 1.0)]
        residual_norm: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_toml(&read(p)?, &p.display().to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(common: &Common, cfg: &ExperimentConfig) -> PathBuf {
    common
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn exec(common: &Common) -> Execution {
    if common.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn finish(common: &Common, cfg: &ExperimentConfig, artifacts: &[Artifact]) -> Result<()> {
    let dir = out_dir(common, cfg);
    write_artifacts(&dir, artifacts)?;
    for a in artifacts {
        println!("{}", dir.join(&a.name).display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Example1 { common, tune } => {
            let mut cfg = load_config(&common)?;
            if tune {
                cfg.example1.shapes = ShapeSource::Tuned;
            }
            let (_, artifacts) = commands::cmd_example1(&cfg, exec(&common))?;
            finish(&common, &cfg, &artifacts)
        }
        Command::Example2 { common } => {
            let cfg = load_config(&common)?;
            let (_, artifacts) = commands::cmd_example2(&cfg, exec(&common))?;
            finish(&common, &cfg, &artifacts)
        }
        Command::Counterexample { common } => {
            let cfg = load_config(&common)?;
            let (report, artifacts) = commands::cmd_counterexample(&cfg)?;
            println!("hadamard-square min eigenvalue: {:.6}", report.square_min_eigenvalue());
            finish(&common, &cfg, &artifacts)
        }
        Command::Analyze { kernel, common } => {
            let cfg = load_config(&common)?;
            let (_, artifacts) = commands::cmd_analyze(&read(&kernel)?, &kernel.display().to_string(), &cfg)?;
            finish(&common, &cfg, &artifacts)
        }
        Command::Fit {
            data,
            kernel,
            fallback,
            common,
        } => {
            let cfg = load_config(&common)?;
            let opts = FitOptions::with_fallback(match fallback {
                Fallback::Error => CholeskyFallback::Error,
                Fallback::Lu => CholeskyFallback::Lu,
                Fallback::Pinv => CholeskyFallback::PseudoInverse,
            });
            let (_, artifacts) = commands::cmd_fit(
                &read(&data)?,
                &data.display().to_string(),
                &read(&kernel)?,
                &kernel.display().to_string(),
                &opts,
            )?;
            finish(&common, &cfg, &artifacts)
        }
        Command::Eval {
            model,
            points,
            bounds,
            residual_norm,
            common,
        } => {
            let cfg = load_config(&common)?;
            let (_, artifacts) = commands::cmd_eval(
                &read(&model)?,
                &model.display().to_string(),
                &read(&points)?,
                &points.display().to_string(),
                bounds.then_some(BoundArgs { residual_norm }),
                exec(&common),
            )?;
            finish(&common, &cfg, &artifacts)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
