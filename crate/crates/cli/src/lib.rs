//! Command-line front end for `rayleigh-core`.

pub mod args;
pub mod commands;

use anyhow::Result;

use args::{Cli, Command};
use commands::Rendered;

/// Runs a parsed command and returns its report without writing it.
pub fn render(cli: &Cli) -> Result<Rendered> {
    match &cli.command {
        Command::Plan(a) => commands::plan(a),
        Command::Estimate(a) => commands::estimate(a),
        Command::Interval(a) => commands::interval(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Experiment(a) => commands::experiment(&a.kind),
    }
}
