use std::process::ExitCode;

use clap::Parser;
use leadsim::cli::{configure_threads, run, Cli, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = configure_threads()
        .map_err(CliError::from)
        .and_then(|()| run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("leadsim: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
