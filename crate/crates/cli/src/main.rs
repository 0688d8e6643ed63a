use std::process::ExitCode;

use clap::Parser;
use rayleigh_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match rayleigh_cli::render(&cli).and_then(|r| r.emit()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
