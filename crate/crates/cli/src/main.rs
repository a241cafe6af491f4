use std::process::ExitCode;

use clap::Parser;
use seqclock_cli::Cli;

fn main() -> ExitCode {
    match Cli::parse().execute() {
        Ok(o) if o.complete => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("error: some computations failed; completed results were written");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
