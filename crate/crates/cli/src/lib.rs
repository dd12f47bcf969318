//! The `poslog` command line: argument parsing, dispatch and reporting.
//!
//! [`run`] never touches the process streams or exits, so it can be driven
//! from tests; `main` prints the [`Outcome`] and exits with its code.

pub mod args;
mod commands;
mod load;

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::Parser;
use poslog::io::{report_json, Report};

pub use commands::{EXIT_FAILS, EXIT_HOLDS, EXIT_UNKNOWN, EXIT_USAGE};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Reads `POSLOG_THREADS` (0 or unset: one thread per core) and sizes the
/// global worker pool. Only the first call in a process has an effect.
pub fn init_threads() -> Result<(), String> {
    let n = match std::env::var("POSLOG_THREADS") {
        Ok(s) if !s.trim().is_empty() => s.trim().parse::<usize>().map_err(|_| format!("POSLOG_THREADS: expected a number, got `{s}`"))?,
        _ => 0,
    };
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Runs one invocation; `args` includes the program name.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json = args.iter().any(|a| a == "--json");
    let mut echo = vec!["poslog".to_string()];
    echo.extend(args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()));

    let cli = match args::Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return Outcome {
                    code: 0,
                    stdout: e.render().to_string(),
                    stderr: String::new(),
                };
            }
            return failure(echo, e.render().to_string(), json);
        }
    };
    if let Err(e) = init_threads() {
        return failure(echo, e, json);
    }
    let json = cli.json;
    match commands::dispatch(cli, echo.clone()) {
        Ok((r, code)) => Outcome {
            code,
            stdout: if json { report_json(&r) } else { r.human() },
            stderr: String::new(),
        },
        Err(e) => failure(echo, e, json),
    }
}

fn failure(echo: Vec<String>, message: String, json: bool) -> Outcome {
    let message = message.trim_end().to_string();
    let stdout = if json {
        let mut r = Report::new(echo, "Error");
        r.notes.push(message.clone());
        report_json(&r)
    } else {
        String::new()
    };
    Outcome {
        code: EXIT_USAGE,
        stdout,
        stderr: format!("error: {}\n", message.strip_prefix("error: ").unwrap_or(&message)),
    }
}
