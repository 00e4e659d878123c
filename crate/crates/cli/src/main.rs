//! Batch driver: scenario config in, CSV and JSON artifacts out.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("feasibility check failed: {0}")]
    Feasibility(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Unsupported(_) => 2,
            CliError::Feasibility(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ambiguity-auction", version, about = "Optimal auction transfers for ambiguity-averse bidders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario config (TOML, or JSON when the extension is .json).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of grid nodes; overrides `grid`.
    #[arg(long)]
    grid: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Minimum and maximum event probabilities over a grid of p (psi.csv).
    Psi(Common),
    /// Optimal transfer for the configured class (mechanism.json, curves.csv).
    Build(Common),
    /// Revenue and feasibility of the standard formats (compare.csv).
    Compare(Common),
    /// Optimal reserve under contamination (reserve.json).
    Reserve(Common),
}

fn setup(common: &Common) -> Result<(config::ScenarioConfig, PathBuf, usize), CliError> {
    let cfg = config::load(&common.config)?;
    let out = cfg.out_dir(common.out.clone())?;
    let n = cfg.grid(common.grid)?;
    Ok((cfg, out, n))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Psi(c) => {
            let (cfg, out, _) = setup(c)?;
            commands::psi(&cfg, out)
        }
        Command::Build(c) => {
            let (cfg, out, n) = setup(c)?;
            commands::build(&cfg, out, n)
        }
        Command::Compare(c) => {
            let (cfg, out, n) = setup(c)?;
            commands::compare(&cfg, out, n)
        }
        Command::Reserve(c) => {
            let (cfg, out, n) = setup(c)?;
            commands::reserve(&cfg, out, n)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
