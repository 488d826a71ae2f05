use std::process::ExitCode;

use clap::Parser;

mod cli;
mod commands;
mod error;
mod io;
mod report;

use cli::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Detect(a) => commands::detect(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::BenchFdr(a) => commands::bench_fdr(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bdetect: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
