//! Command-line front end: configuration, orchestration across seeds and
//! artifact persistence.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "evolime", version, about = "Evolved LIME explanations for image classifiers")]
pub struct Cli {
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed to use instead of the configured list. Repeatable.
    #[arg(long = "seed", global = true)]
    pub seeds: Vec<u64>,
    /// Upper bound on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output location (directory, or file for `init` and `hv-curve`).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a configuration file with every default filled in.
    Init,
    /// Segment an image and write the label map plus a boundary overlay.
    Segment(SingleImage),
    /// Run one explanation with fixed segmentation parameters.
    Explain(SingleImage),
    /// Evolve segmentation parameters, one run per seed.
    Evolve {
        #[arg(long)]
        image: Option<PathBuf>,
    },
    /// Cross-seed SD and RSD maps from stored runs.
    Rsd {
        /// run.json files, seed directories, or an evolve output directory.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Thresholds for the sweep (ascending). Repeatable.
        #[arg(long = "threshold")]
        thresholds: Vec<f64>,
        /// Threshold used for the rendered RSD map and report.
        #[arg(long)]
        report_threshold: Option<f64>,
    },
    /// Per-generation hypervolume table of a stored run.
    HvCurve {
        /// A run.json file or its directory.
        run: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SingleImage {
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub min_size: Option<i64>,
    #[arg(long)]
    pub target_class: Option<usize>,
}

/// Runs a parsed command inside a thread pool bounded by `--jobs`.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    pool.install(|| commands::dispatch(cli))
}
