mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Simulation and bound laboratory for least squares on beta-mixing data.
#[derive(Debug, Parser)]
#[command(name = "mixfree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON config for the command.
    #[arg(long)]
    config: PathBuf,
    /// Directory receiving the output files (created if missing).
    #[arg(long, default_value = "mixfree-out")]
    out: PathBuf,
    /// Replaces the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Do not print a summary to stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a stationary trajectory: trajectory.csv.
    Simulate(Common),
    /// Evaluate every bound-side quantity: bound_report.json, terms.csv.
    Bound(Common),
    /// Certify the weakly sub-Gaussian constant of a class: certificate.json.
    Certify(Common),
    /// Excess-risk sweep over n and mixing levels: sweep.csv, summary.json, sweep.svg.
    Sweep(Common),
    /// Exceedance frequency of a probabilistic bound: coverage.csv, coverage.json.
    Coverage(Common),
    /// Quadratic and multiplier process diagnostics: diagnostics.json.
    Diagnose(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Simulate(c) => commands::simulate(c),
        Command::Bound(c) => commands::bound(c),
        Command::Certify(c) => commands::certify(c),
        Command::Sweep(c) => commands::sweep(c),
        Command::Coverage(c) => commands::coverage(c),
        Command::Diagnose(c) => commands::diagnose(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
