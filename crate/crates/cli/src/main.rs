//! `fsdr` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure or unwritable output.

mod args;
mod commands;
mod config;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use config::RunConfig;
use error::{CliError, CliResult};

fn run(cli: &Cli) -> CliResult<()> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(t) = cli.threads.or(cfg.cli.threads) {
        if t == 0 {
            return Err(CliError::config("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Simulate(a) => commands::cmd_simulate(a, &cfg),
        Command::Fit(a) => commands::cmd_fit(a, &cfg).map(|_| ()),
        Command::Scree(a) => commands::cmd_scree(a, &cfg).map(|_| ()),
        Command::Bench(a) => commands::cmd_bench(a, &cfg),
        Command::Reproduce(a) => commands::cmd_reproduce(a, &cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fsdr: {e}");
            e.exit_code()
        }
    }
}
