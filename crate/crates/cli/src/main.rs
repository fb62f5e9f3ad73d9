mod args;
mod commands;

use args::{Cli, Command};
use clap::Parser;
use commands::{Failure, EXIT_USAGE};
use std::process::ExitCode;

fn main() -> ExitCode {
    let argv = args::rewrite_tolerance_flags(std::env::args());
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Flow(a) => commands::flow_cmd(a),
        Command::Bifurcation(a) => commands::bifurcation_cmd(a),
        Command::Table(a) => commands::table(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure { code, message }) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
