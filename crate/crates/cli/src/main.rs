//! `lexcite` binary: ingest -> split -> index -> embed -> run -> evaluate ->
//! export-triplets, one subcommand each.
//!
//! Exit codes: 0 on success, 1 on operational errors, 2 on usage errors.

mod args;
mod commands;

use std::process::ExitCode;

fn main() -> ExitCode {
    let cli = match args::parse_args(std::env::args_os()) {
        Ok(cli) => cli,
        // clap uses exit code 2 for usage errors and 0 for --help/--version.
        Err(err) => err.exit(),
    };
    match commands::execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
