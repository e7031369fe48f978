//! Command-line front end: argument types, JSON reports and the subcommands.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;

pub use args::{Cli, Command};
pub use commands::{run, Output};
pub use error::CliError;
pub use report::{Report, SCHEMA_VERSION};

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "RQSVT_THREADS";

/// Size the global worker pool from `RQSVT_THREADS`, if set.
pub fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let k: usize = match v.trim().parse() {
        Ok(k) if k > 0 => k,
        _ => return error::config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}
