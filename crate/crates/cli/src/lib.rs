//! Library side of the `tdrc` command line tool.

pub mod commands;
pub mod config;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use config::{ConfigError, RunConfig};
pub use pipeline::FeatureMode;

#[derive(Debug, Parser)]
#[command(name = "tdrc", version, about = "Time-domain MFCC and reservoir classification experiments")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(short, long, global = true, default_value = "tdrc.toml")]
    pub config: PathBuf,
    /// Override a config leaf, e.g. `--set experiment.n_seeds=3`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
    /// Worker threads (defaults to all cores).
    #[arg(short, long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Catalogue the configured dataset subset.
    Manifest,
    /// Compute features for every clip.
    Extract {
        #[arg(long, value_enum, default_value = "reference")]
        mode: FeatureMode,
        /// Also write each matrix as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Train the convolution reservoir.
    TrainExtractor,
    /// Cross-validate the classifier for the configured experiments.
    RunExperiment,
    /// Summarize report CSVs.
    Report {
        /// Report files; defaults to every report under the output directory.
        files: Vec<PathBuf>,
    },
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            log::debug!("thread pool already configured: {e}");
        }
    }
    let sets = cli.sets.iter().map(|s| config::parse_set(s)).collect::<anyhow::Result<Vec<_>>>()?;
    let cfg = RunConfig::load(&cli.config, &sets)?;
    match &cli.command {
        Command::Manifest => commands::cmd_manifest(&cfg).map(drop),
        Command::Extract { mode, csv } => commands::cmd_extract(&cfg, *mode, *csv).map(drop),
        Command::TrainExtractor => commands::cmd_train_extractor(&cfg).map(drop),
        Command::RunExperiment => commands::cmd_run_experiment(&cfg).map(drop),
        Command::Report { files } => commands::cmd_report(&cfg, files).map(drop),
    }
}

/// 2 for configuration errors, 3 for data errors, 4 for numerical failures.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use tdrc_core::Error as E;
    for cause in err.chain() {
        if cause.is::<ConfigError>() || cause.is::<clap::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<E>() {
            return match e {
                E::InvalidArgument(_) | E::DimensionMismatch(_) => 2,
                E::DegenerateFilter { .. }
                | E::NoConvergence { .. }
                | E::DegenerateReservoir { .. }
                | E::IllConditioned
                | E::ConstantTarget => 4,
                _ => 3,
            };
        }
        if cause.is::<std::io::Error>() || cause.is::<csv::Error>() || cause.is::<serde_json::Error>() {
            return 3;
        }
    }
    1
}
