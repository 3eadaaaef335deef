//! `quadflow` command-line experiment runner.
//!
//! Exit codes: 0 when every asserted invariant passed, 2 when a run completed
//! with an invariant failure, 1 on usage, schema or i/o errors.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::Parser;

use crate::config::Cli;
use crate::error::{EXIT_INVARIANT, EXIT_OK, EXIT_USAGE};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(outcome) => {
            for failure in &outcome.failures {
                eprintln!("invariant failed: {failure}");
            }
            ExitCode::from(if outcome.failures.is_empty() { EXIT_OK } else { EXIT_INVARIANT })
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}
