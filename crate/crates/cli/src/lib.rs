//! `oamlab` command-line front end.
//!
//! [`run`] parses arguments, executes one subcommand and returns the
//! process exit code: 0 on success, 1 on I/O failure, 2 on usage errors
//! and invalid parameters, 3 when a numerical method fails to converge.

mod args;
mod compute;
mod figures;
mod output;

use std::ffi::OsString;
use std::fmt;

use clap::Parser;

pub use args::{Cli, Command};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "OAMLAB_THREADS";

/// A failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_IO,
            message: message.into(),
        }
    }

    /// Wraps a library error raised at one grid point.
    pub fn at_point(err: oamlab::Error, alpha: &str, l0: i64, t: f64) -> Self {
        let code = if err.is_numerical() {
            EXIT_NUMERIC
        } else if matches!(err, oamlab::Error::Io(_)) {
            EXIT_IO
        } else {
            EXIT_USAGE
        };
        Self {
            code,
            message: format!("alpha={alpha} l0={l0} t={t}: {err}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}

/// Runs one invocation and returns its exit code. Errors go to stderr.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match with_thread_pool(|| execute(&cli.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn with_thread_pool(f: impl FnOnce() -> Result<(), CliError> + Send) -> Result<(), CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => f(),
        Ok(v) => {
            let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
                CliError::usage(format!("{THREADS_ENV}={v:?} is not a positive integer"))
            })?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::usage(e.to_string()))?;
            pool.install(f)
        }
    }
}

/// Executes a parsed subcommand.
pub fn execute(command: &Command) -> Result<(), CliError> {
    match command {
        Command::Amplitudes(a) => compute::amplitudes(a),
        Command::Sweep(a) => compute::sweep(a),
        Command::Universal(a) => compute::universal(a),
        Command::Concurrence(a) => compute::concurrence(a),
        Command::Montecarlo(a) => compute::montecarlo(a),
        Command::Figures(a) => figures::figures(a),
    }
}
