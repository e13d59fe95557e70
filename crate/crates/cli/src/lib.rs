//! Command-line front end for `resetq`: config loading with unit-suffixed
//! quantities, experiment commands and CSV/JSON emission.

pub mod cli;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod units;

use cli::{Cli, Command, SweepKind};
use commands::Report;
use error::CliError;

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Sidf(a) => commands::sidf(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Sweep { kind } => match kind {
            SweepKind::Ssigma(a) => commands::ssigma(a),
            SweepKind::K(a) => commands::sweep_ks(a),
            SweepKind::Cpsd(a) => commands::cpsd_sweep(a),
        },
        Command::Stability(a) => commands::stability(a),
    }
}
