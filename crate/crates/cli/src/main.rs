//! `orka`: synthetic data, object extraction, denoising and experiments.

mod commands;
mod error;
mod format;
mod report;
mod settings;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::settings::Config;

#[derive(Debug, Parser)]
#[command(
    name = "orka",
    version,
    about = "Object reconstruction from shifted multi-measurement data"
)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

/// Options shared by all subcommands; each may also come from `--config`.
#[derive(Debug, Args, Default)]
pub struct Common {
    /// Plain-text `key=value` file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Regularization weight, a number or "inf"; comma list gives one per object
    #[arg(long, global = true)]
    pub mu: Option<String>,

    /// Largest per-step shift (Lipschitz bound)
    #[arg(long = "c", global = true)]
    pub c: Option<u32>,

    /// Graph band width K
    #[arg(long = "k", global = true)]
    pub k: Option<usize>,

    /// Number of objects to extract
    #[arg(long, global = true)]
    pub objects: Option<usize>,

    /// 1 for matrices, 2 for videos; inferred from the input when omitted
    #[arg(long, global = true)]
    pub dims: Option<usize>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Thread cap for library calls; 1 runs sequentially
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Largest admissible node count of one graph partition
    #[arg(long, global = true)]
    pub node_budget: Option<u64>,

    /// Output file format: csv or bin
    #[arg(long, global = true)]
    pub format: Option<String>,

    /// Output file, or directory for extract and decompose
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diagonal matrix with ones separated by 0, 1, ..., max-gap zeros
    GenGap {
        #[arg(long)]
        max_gap: Option<usize>,
    },
    /// Moving Gaussian pulses (dims 1) or a moving square over a background (dims 2)
    GenScene {
        #[arg(long)]
        rows: Option<usize>,
        #[arg(long)]
        cols: Option<usize>,
        /// Video frames (dims 2)
        #[arg(long)]
        frames: Option<usize>,
        /// Square side (dims 2)
        #[arg(long)]
        side: Option<usize>,
        /// One velocity per pulse (dims 1) or "rows,cols" per frame (dims 2)
        #[arg(long)]
        velocity: Option<String>,
        /// Relative amplitude and width variation over the columns
        #[arg(long)]
        drift: Option<f64>,
        /// Pulse standard deviation in rows
        #[arg(long)]
        width: Option<f64>,
        /// Background amplitude (dims 2)
        #[arg(long)]
        background: Option<f64>,
        /// Add Gaussian noise for this target PSNR in dB
        #[arg(long)]
        noise_db: Option<f64>,
    },
    /// Extract one object
    Extract { input: PathBuf },
    /// Extract `--objects` objects one after another
    Decompose { input: PathBuf },
    /// Sum of `--objects` extracted objects
    Denoise { input: PathBuf },
    /// PSNR of `other` against `reference` in dB
    Psnr { reference: PathBuf, other: PathBuf },
    /// Graph-stage wall clock over a range of K
    BenchK {
        #[arg(long = "m")]
        m: Option<usize>,
        #[arg(long = "n")]
        n: Option<usize>,
        /// Range such as 3..8 or a list such as 3,5,7
        #[arg(long)]
        ks: Option<String>,
        #[arg(long)]
        min_time_ms: Option<u64>,
    },
    /// Graph-stage wall clock over a list of N
    BenchN {
        #[arg(long = "m")]
        m: Option<usize>,
        #[arg(long)]
        ns: Option<String>,
        #[arg(long)]
        min_time_ms: Option<u64>,
    },
    /// Mean error of the K-graph against the exhaustive optimum
    CompareOracle {
        #[arg(long = "m")]
        m: Option<usize>,
        #[arg(long = "n")]
        n: Option<usize>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        ks: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.common.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let ctx = commands::Ctx::new(cli.common, config)?;
    with_workers(ctx.workers, || commands::run(&cli.command, &ctx))
}

#[cfg(feature = "parallel")]
fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {w} workers: {e}")))?
            .install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_workers<T>(
    _workers: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError>,
) -> Result<T, CliError> {
    f()
}
