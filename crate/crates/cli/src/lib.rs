//! Library side of the `nqkd` command: argument parsing, configuration
//! layering and the commands themselves, kept out of `main` so tests can
//! drive them directly.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{SimulateOp, ValidateOp};
use crate::config::{Format, RunConfig};
use crate::output::Output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nqkd_core::Error),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(nqkd_core::Error::NoSignChange { .. }) | CliError::Output(_) => 1,
            // Every other core error rejects an input value.
            CliError::Core(_) => 2,
        }
    }
}

/// Exit status when a validation run has failing checks.
pub const EXIT_VALIDATION_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nqkd", version, about = "Key rates, thresholds and validation runs for N-party BB84 and six-state QKD")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON file with default parameters; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: RunConfig,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Asymptotic rates over a grid of pairwise error rates
    Asymptotic,
    /// Optimized finite-key rates over a list of round counts
    Finite,
    /// Round count at which six-state overtakes N-BB84
    Threshold,
    /// Run one simulation engine
    Simulate {
        #[arg(value_enum)]
        op: SimulateOp,
    },
    /// Check the closed forms and bounds against the simulation engines
    Validate {
        #[arg(value_enum, default_value = "all")]
        op: ValidateOp,
    },
}

/// A finished command, rendered.
#[derive(Debug)]
pub struct Execution {
    pub output: Output,
    pub text: String,
    pub out: Option<PathBuf>,
}

impl Execution {
    pub fn exit_code(&self) -> i32 {
        if self.output.passed == Some(false) {
            EXIT_VALIDATION_FAILED
        } else {
            0
        }
    }
}

pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::default(),
    };
    Ok(base.overlaid(&cli.params))
}

pub fn execute(cli: &Cli) -> Result<Execution, CliError> {
    let cfg = resolve(cli)?;
    let output = match &cli.command {
        Command::Asymptotic => commands::asymptotic(&cfg)?,
        Command::Finite => commands::finite(&cfg)?,
        Command::Threshold => commands::threshold(&cfg)?,
        Command::Simulate { op } => commands::simulate(*op, &cfg)?,
        Command::Validate { op } => commands::validate(*op, &cfg)?,
    };
    let format = cfg.format.unwrap_or(Format::Csv);
    let text = output.render(format)?;
    Ok(Execution {
        output,
        text,
        out: cfg.out,
    })
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I) -> Result<Execution, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::Usage(e.to_string()))?;
    execute(&cli)
}
