mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use commands::Status;
use error::{CliError, CliResult};

/// Worker count for the data-parallel suites.
const THREADS_VAR: &str = "QCMAP_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_VAR} must be a positive integer (got {raw:?})")))?;
    if n == 0 {
        return Err(CliError::Usage(format!("{THREADS_VAR} must be a positive integer")));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Threads(e.to_string()))
}

fn run(cli: &Cli) -> CliResult<Status> {
    init_threads()?;
    match &cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Realize(a) => commands::realize_cmd(a),
        Command::Probe(a) => commands::probe_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
