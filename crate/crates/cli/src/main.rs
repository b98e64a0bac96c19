//! Command-line front end for the contrarian backtesting engine.
//!
//! Exit codes: 0 on success, 1 on usage/data errors, 2 when no cell of the
//! requested grid produced any cohort.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, CompareArgs, SynthArgs};

#[derive(Parser)]
#[command(
    name = "contrarian",
    version,
    about = "Backtests of overlapping J-K loser/winner/contrarian portfolio strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate (J, K, G) cells; writes summary.csv and cohorts.csv
    Run(CommonArgs),
    /// Evaluate a (J, K) grid at one G; writes one grid CSV per leg
    Sweep(CommonArgs),
    /// Paired difference tests between groupings or panels; writes diff.csv
    Compare(CompareArgs),
    /// Generate a synthetic panel; writes panel.csv
    Synth(SynthArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let result = match &cli.command {
        Command::Run(args) => args
            .resolve(&[3, 5, 10])
            .and_then(|config| commands::cmd_run(&config)),
        Command::Sweep(args) => args
            .resolve(&[10])
            .and_then(|config| commands::cmd_sweep(&config)),
        Command::Compare(args) => args
            .resolve()
            .and_then(|(config, mode)| commands::cmd_compare(&config, mode)),
        Command::Synth(args) => args
            .resolve()
            .and_then(|(config, out)| commands::cmd_synth(&config, &out)),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
