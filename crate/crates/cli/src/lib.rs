//! The `sabnn` command line: training, evaluation, sharpness, the PAC-Bayes bound and
//! discrete Gibbs posteriors, with canonical-JSON checkpoints.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod checkpoint;
pub mod commands;
pub mod config_file;
pub mod error;
pub mod source;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

use args::{Cli, Command};
pub use error::{CliError, CliResult};

/// Parses `argv` and runs the command, returning the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Train(a) => commands::cmd_train(a, out, err),
        Command::Eval(a) => commands::cmd_eval(a, out),
        Command::Sharpness(a) => commands::cmd_sharpness(a, out),
        Command::Bound(a) => commands::cmd_bound(a, out),
        Command::Gibbs(a) => commands::cmd_gibbs(a, out),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
