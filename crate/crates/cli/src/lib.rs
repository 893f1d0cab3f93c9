//! Command-line driver for `fswt-core`: subcommands, flat key=value configs,
//! deterministic JSON/CSV artifacts and machine-readable errors.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod format;

use std::ffi::OsString;
use std::io::Write;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};

use crate::args::Cli;
use crate::error::{CliError, EXIT_OK};

/// Parse `argv`, run the command, print human text to stdout and the error
/// JSON to stderr. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let (code, out, err) = run_captured(argv);
    let _ = stdout.lock().write_all(out.as_bytes());
    if let Some(e) = err {
        let _ = writeln!(stderr.lock(), "{e}");
    }
    code
}

/// As [`run`], returning (exit code, stdout text, stderr JSON).
pub fn run_captured<I, T>(argv: I) -> (i32, String, Option<String>)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (EXIT_OK, text, None),
                _ => {
                    let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ").to_string();
                    let ce = CliError::usage(first);
                    (ce.code, text, Some(ce.to_json()))
                }
            };
        }
    };
    match commands::execute(&cli.command) {
        Ok(outcome) => match outcome.error {
            None => (EXIT_OK, outcome.stdout, None),
            Some(e) => (e.code, outcome.stdout, Some(e.to_json())),
        },
        Err(e) => {
            let mut e = e.with_context("command", cli.command.name());
            if e.kind == "usage" && e.help.is_none() {
                let mut cmd = Cli::command();
                cmd.build();
                let usage = cmd
                    .find_subcommand_mut(cli.command.name())
                    .map(|c| c.render_usage().to_string())
                    .unwrap_or_default();
                let help = format!("error: {}\n\n{usage}\n\nFor more information, try '--help'.\n", e.message);
                e = e.with_help(help);
            }
            (e.code, e.help.clone().unwrap_or_default(), Some(e.to_json()))
        }
    }
}
