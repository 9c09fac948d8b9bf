//! Batch experiments over planted-partition instances: generation, recovery,
//! bound certification and spectrum dumps.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{ExperimentConfig, Format};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Verify(#[from] planted::verify::VerifyError),
    #[error(transparent)]
    Recovery(#[from] planted::recovery::RecoveryError),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }
}

/// What a command concluded; maps onto the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// A bound or success threshold was not met.
    Failed,
}

#[derive(Debug, Parser)]
#[command(name = "planted", version, about = "Planted-partition recovery experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args, Clone, Default)]
pub struct Common {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `trials`.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Overrides the base `seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file (directory for `generate`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one instance file (plus a `.truth` partition) per sweep point and trial.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Run recovery on instance files, or on freshly sampled instances from the config.
    Recover {
        /// Instance files; when empty, instances are sampled from the config.
        files: Vec<PathBuf>,
        /// Equal-size clusters of size S (uniform algorithm).
        #[arg(long, value_name = "S")]
        uniform: Option<usize>,
        /// Estimate supercluster counts from the spectrum.
        #[arg(long)]
        auto_counts: bool,
        /// Size slack used by the recovery thresholds.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Noise constant `nu`.
        #[arg(long)]
        nu: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo check of one bound over the config's grid.
    Certify {
        /// spectral-norm, weyl, separation, projector or degree-events.
        bound: String,
        #[command(flatten)]
        common: Common,
    },
    /// Descending eigenvalues of B-hat and B with gap markers.
    Spectrum {
        file: PathBuf,
        /// Noise constant `nu` for the gap threshold.
        #[arg(long)]
        nu: Option<f64>,
        /// Separation constant `c`; defaults to the honest value of the file's spec.
        #[arg(long)]
        separation: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Generate { common } => commands::generate(&common),
        Command::Recover {
            files,
            uniform,
            auto_counts,
            epsilon,
            nu,
            common,
        } => commands::recover(
            &common,
            &files,
            &commands::RecoverFlags {
                uniform,
                auto_counts,
                epsilon,
                nu,
            },
        ),
        Command::Certify { bound, common } => commands::certify(&common, &bound),
        Command::Spectrum {
            file,
            nu,
            separation,
            common,
        } => commands::spectrum(&common, &file, nu, separation),
    }
}
