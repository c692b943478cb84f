//! Command-line front end: argument parsing, subcommands and the session
//! server.

pub mod args;
pub mod commands;
pub mod server;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};
use commands::CliError;

/// Parse `argv` and run the command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Evolve(a) => commands::evolve(a),
        Command::Pmea(a) => commands::pmea(a),
        Command::Experiment(a) => commands::experiment(a),
        Command::Stats(a) => commands::stats(a),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => report(&e),
    }
}

fn report(e: &CliError) -> i32 {
    eprintln!("error: {}", e.message());
    e.exit_code()
}
