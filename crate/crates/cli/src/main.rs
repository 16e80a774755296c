//! Command-line front end for the sector-resolved spin-chain
//! simulator. Every subcommand reads one configuration document (TOML,
//! or JSON by extension), runs a pipeline stage from the core crate,
//! and writes plain-text artifacts
//! (CSV with commented headers, JSON summaries, optional SVG plots)
//! into an output directory. Runs are deterministic: the same
//! configuration and seed produce byte-identical files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use config::RunConfig;
use output::OutputContext;

/// What went wrong, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Unusable configuration or arguments: exit code 2.
    Config(String),
    /// Failure while computing or writing results: exit code 3.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "mpemba",
    version,
    about = "Sector-resolved dynamics of a long-range XY chain with a tilted field"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Configuration file (TOML, or JSON with a `.json` extension).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing); defaults to the
    /// configuration's `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Entanglement-asymmetry relaxation curves over an angle grid.
    Relax(RunArgs),
    /// Compare two initial conditions for anomalous relaxation order.
    Qme(RunArgs),
    /// Per-sector spectral statistics and weighted gap histograms.
    Spectra(RunArgs),
    /// Operator-space Lanczos chains and charge-transfer correlators.
    Krylov(RunArgs),
    /// Dephased-bath prediction for a window matrix element.
    Theory(RunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Relax(_) => "relax",
            Command::Qme(_) => "qme",
            Command::Spectra(_) => "spectra",
            Command::Krylov(_) => "krylov",
            Command::Theory(_) => "theory",
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Relax(a)
            | Command::Qme(a)
            | Command::Spectra(a)
            | Command::Krylov(a)
            | Command::Theory(a) => a,
        }
    }
}

fn run(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let config = RunConfig::load(&args.config)?;
    let out_dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    let out = OutputContext::new(&out_dir, command.name(), config.sha256())?;
    match command {
        Command::Relax(_) => commands::relax(&config, &out),
        Command::Qme(_) => commands::qme(&config, &out),
        Command::Spectra(_) => commands::spectra(&config, &out),
        Command::Krylov(_) => commands::krylov(&config, &out),
        Command::Theory(_) => commands::theory(&config, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ CliError::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e @ CliError::Runtime(_)) => {
            eprintln!("{e}");
            ExitCode::from(3)
        }
    }
}
