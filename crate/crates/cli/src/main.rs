//! `promptcast`: region sweeps, discount tables, game simulation and market
//! replay.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 4 consistency failure.

mod commands;
mod config;
mod error;
mod format;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{load, MarketConfig, Scenario, SweepConfig};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "promptcast", version, about = "Truthfulness analysis for sequential forecasting mechanisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Classify every point of a parameter sweep (CSV).
    Classify(SweepArgs),
    /// Minimal discount ratios over a parameter sweep (CSV).
    Discount(SweepArgs),
    /// Simulate an Alice-Bob-Alice scenario (JSON report).
    Simulate(SimulateArgs),
    /// Discounted market maker.
    #[command(subcommand)]
    Market(MarketCommand),
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Sweep configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Grid overrides, e.g. "rho=-0.95:0.95:0.05;ratio=0.25,1,4;tau_c=0,0.5,2".
    #[arg(long, value_name = "SPEC")]
    grid: Option<String>,
    /// Scoring rule, overriding the configuration.
    #[arg(long)]
    rule: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum MarketCommand {
    /// Simulate truthful single-trader sessions and compare the mean loss
    /// with its bound.
    Simulate {
        /// Market configuration (TOML).
        #[arg(long, value_name = "PATH")]
        config: PathBuf,
        #[arg(long, value_name = "N")]
        seed: Option<u64>,
        /// Number of sessions.
        #[arg(long, value_name = "N")]
        samples: Option<usize>,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        /// Also write the trade log of the first session.
        #[arg(long, value_name = "PATH")]
        trade_log: Option<PathBuf>,
    },
    /// Recompute and settle a trade log.
    Replay {
        /// Trade log (JSON lines).
        log: PathBuf,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::config(format!("cannot write to standard output: {e}"))),
    }
}

fn sweep_config(args: &SweepArgs) -> Result<SweepConfig, CliError> {
    let mut config = match &args.config {
        Some(p) => load::<SweepConfig>(p)?,
        None => SweepConfig::default(),
    };
    if let Some(spec) = &args.grid {
        config.apply_grid(spec)?;
    }
    if let Some(rule) = &args.rule {
        config.rule.clone_from(rule);
    }
    if args.out.is_some() {
        config.out.clone_from(&args.out);
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Classify(args) => {
            let config = sweep_config(&args)?;
            emit(config.out.as_deref(), &commands::classify_sweep(&config)?)
        }
        Command::Discount(args) => {
            let config = sweep_config(&args)?;
            emit(config.out.as_deref(), &commands::discount_sweep(&config)?)
        }
        Command::Simulate(args) => {
            let mut scenario: Scenario = load(&args.config)?;
            if let Some(seed) = args.seed {
                scenario.seed = seed;
            }
            if let Some(n) = args.samples {
                scenario.samples = n;
            }
            emit(args.out.as_deref(), &commands::simulate(&scenario)?)
        }
        Command::Market(MarketCommand::Simulate { config, seed, samples, out, trade_log }) => {
            let mut config: MarketConfig = load(&config)?;
            if let Some(seed) = seed {
                config.seed = seed;
            }
            if let Some(n) = samples {
                config.sessions = n;
            }
            let (report, log) = commands::market_simulate(&config)?;
            if let Some(path) = trade_log {
                emit(Some(&path), &log)?;
            }
            emit(out.as_deref(), &report)
        }
        Command::Market(MarketCommand::Replay { log, out }) => {
            let text = std::fs::read_to_string(&log)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", log.display())))?;
            emit(out.as_deref(), &commands::market_replay(&text)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("promptcast: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
