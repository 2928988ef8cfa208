//! `eargaze` — reproducible ear-EOG analysis pipelines.
//!
//! Exit codes: 0 success, 2 validation error, 3 data error, 4 internal.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::PipelineConfig;
use eargaze::ErrorCategory;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(eargaze::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<eargaze::Error> for CliError {
    fn from(e: eargaze::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    /// Machine-readable error category for the exit code.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e.category() {
                ErrorCategory::Validation => 2,
                ErrorCategory::Data => 3,
                ErrorCategory::Internal => 4,
            },
        }
    }

    pub fn category_name(&self) -> &'static str {
        match self {
            CliError::Config(_) => "validation",
            CliError::Core(e) => match e.category() {
                ErrorCategory::Validation => "validation",
                ErrorCategory::Data => "data",
                ErrorCategory::Internal => "internal",
            },
        }
    }
}

#[derive(Parser)]
#[command(
    name = "eargaze",
    version,
    about = "Ear-EOG eye tracking: synthesis, preprocessing, montage ranking and gaze-angle regression"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Pipeline configuration JSON; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master RNG seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Dotted-path config overrides, e.g. --override study.n_subjects=4
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic study dataset from the dipole head model.
    Synth,
    /// Bandpass-filter recordings and write conditioned CSVs.
    Preprocess,
    /// Rank electrode montages against gold EOG and the eye tracker.
    Montages,
    /// Label saccades and extract deflections and average waveforms.
    Saccades,
    /// Fit and evaluate the deflection-to-angle regressors.
    Regress,
    /// synth (or load) -> montages -> saccades -> regress, with a manifest.
    Pipeline,
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let (config, canonical) = PipelineConfig::load(
        cli.config.as_deref(),
        &cli.overrides,
        cli.seed,
        cli.out.as_deref(),
    )?;
    match cli.command {
        Command::Synth => commands::cmd_synth(&config, &canonical),
        Command::Preprocess => commands::cmd_preprocess(&config, &canonical),
        Command::Montages => commands::cmd_montages(&config, &canonical),
        Command::Saccades => commands::cmd_saccades(&config, &canonical),
        Command::Regress => commands::cmd_regress(&config, &canonical),
        Command::Pipeline => commands::cmd_pipeline(&config, &canonical),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error ({}): {e}", e.category_name());
            ExitCode::from(e.exit_code())
        }
    }
}
