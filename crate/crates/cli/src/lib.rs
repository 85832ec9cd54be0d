//! Batch front-end for the `hdqkd` simulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod render;

pub use config::{Cli, Command, GlobalOpts, RunConfig};
pub use error::{CliError, CliResult};

/// Runs a parsed command line and returns the text to print on stdout.
pub fn run(cli: &Cli) -> CliResult<String> {
    if let Command::Otp(args) = &cli.command {
        return commands::cmd_otp(args);
    }
    let cfg = RunConfig::resolve(&cli.opts)?;
    let go = || match &cli.command {
        Command::Crosstalk => commands::cmd_crosstalk(&cfg),
        Command::Bb84 => commands::cmd_bb84(&cfg),
        Command::Security => commands::cmd_security(&cfg),
        Command::CompareDetectors => commands::cmd_compare_detectors(&cfg),
        Command::Otp(_) => unreachable!("handled above"),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?
            .install(go),
        None => go(),
    }
}
