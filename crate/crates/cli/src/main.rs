//! `mzuq`: runs chaos-Galerkin systems and their Mori-Zwanzig reduced models
//! from a TOML config, writing CSV and SVG artifacts.

mod commands;
mod config;
mod output;
mod svg;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mzuq_core::MzError;

use config::{ModelKind, RunConfig};

#[derive(Parser)]
#[command(name = "mzuq", version, about = "Chaos-Galerkin systems and Mori-Zwanzig reduced models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model name (overrides `model.name`).
    #[arg(long)]
    model: Option<String>,
    /// Cache directory for kernel tables and memory-length estimates.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the e, c and d product tensors.
    Tensors(Common),
    /// Run one model.
    Run(Common),
    /// Estimate the memory length from the full system.
    Estimate(Common),
    /// Relative errors and plots; the first run directory is the reference.
    Compare {
        #[command(flatten)]
        common: Common,
        runs: Vec<PathBuf>,
    },
}

fn exit_code(e: &MzError) -> u8 {
    match e {
        MzError::Divergence { .. }
        | MzError::NodeDivergence { .. }
        | MzError::Conditioning(_)
        | MzError::NumericalInconsistency(_) => 2,
        MzError::EstimationFailed(_) | MzError::NoSwitch { .. } => 3,
        _ => 1,
    }
}

fn load(common: &Common) -> Result<RunConfig, MzError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(model) = &common.model {
        cfg.model = model.parse::<ModelKind>()?;
    }
    if let Some(cache) = &common.cache {
        cfg.cache = Some(cache.clone());
    }
    Ok(cfg)
}

fn init_threads() -> Result<(), MzError> {
    let Ok(v) = std::env::var("MZUQ_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| MzError::Config(format!("MZUQ_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| MzError::Config(e.to_string()))
}

fn execute(cli: Cli) -> Result<(), MzError> {
    init_threads()?;
    let written = match &cli.command {
        Command::Tensors(c) => commands::tensors(&load(c)?)?,
        Command::Run(c) => commands::run(&load(c)?)?,
        Command::Estimate(c) => {
            let (t0, files) = commands::estimate(&load(c)?)?;
            let _ = writeln!(std::io::stdout(), "t0_hat {t0}");
            files
        }
        Command::Compare { common, runs } => commands::compare(&load(common)?, runs)?,
    };
    // a closed stdout (e.g. piped into `head`) is not an error
    let mut out = std::io::stdout().lock();
    for p in written {
        let _ = writeln!(out, "wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
