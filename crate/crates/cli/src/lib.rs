//! Command-line front end: CSV ingestion, test execution, Monte Carlo runs and
//! batch calibration, all reporting JSON.
//!
//! Exit codes: 0 on success, 1 on any error (usage errors included), 2 when
//! `test --exit-on-reject` rejects at α or when `calibrate` finds a missed band.

pub mod args;
pub mod commands;
pub mod ingest;
pub mod report;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;

pub use args::{CalibrateArgs, Cli, Command, SimulateArgs, TestArgs, TestOptions};
pub use commands::{cmd_calibrate, cmd_list, cmd_simulate, cmd_test};
pub use report::{CalibrationRow, CalibrationSummary, Decision, RowStatus, RunReport, SCHEMA_VERSION};

/// Errors surfaced by the command layer.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    /// Some scenarios of a batch could not run.
    #[error("calibration batch: {0}")]
    Batch(String),
    /// An error from the library, shown verbatim.
    #[error(transparent)]
    Test(#[from] hdtest::Error),
}

/// Process exit status of a completed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// `test --exit-on-reject` rejected, or `calibrate` missed a band.
    Flagged,
}

pub const EXIT_SUCCESS: u8 = 0;
pub const EXIT_ERROR: u8 = 1;
pub const EXIT_FLAGGED: u8 = 2;

/// Serializes `value` as pretty JSON followed by a newline.
pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize to JSON");
    s.push('\n');
    s
}

fn write_output(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
}

fn save(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Runs a parsed command, writing its report to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Test(a) => {
            let report = cmd_test(&a)?;
            let text = if a.table { report.table() } else { to_json(&report) };
            write_output(out, &text)?;
            let flagged = a.exit_on_reject && report.decision == Decision::Reject;
            Ok(if flagged { Outcome::Flagged } else { Outcome::Success })
        }
        Command::Simulate(a) => {
            let report = cmd_simulate(&a)?;
            let json = to_json(&report);
            if let Some(path) = &a.output {
                save(path, &json)?;
            }
            write_output(out, &json)?;
            Ok(Outcome::Success)
        }
        Command::Calibrate(a) => {
            let summary = cmd_calibrate(&a)?;
            let json = to_json(&summary);
            if let Some(path) = &a.output {
                save(path, &json)?;
            }
            write_output(out, &if a.table { summary.table() } else { json })?;
            if summary.errors > 0 {
                let first = summary.rows.iter().find_map(|r| r.error.clone()).unwrap_or_default();
                return Err(CliError::Batch(format!("{} scenario(s) failed to run; first: {first}", summary.errors)));
            }
            Ok(if summary.failed > 0 { Outcome::Flagged } else { Outcome::Success })
        }
        Command::List => {
            write_output(out, &to_json(&cmd_list()))?;
            Ok(Outcome::Success)
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_ERROR;
        }
        Err(e) => {
            let _ = write!(out, "{e}");
            return EXIT_SUCCESS;
        }
    };
    match execute(cli, out) {
        Ok(Outcome::Success) => EXIT_SUCCESS,
        Ok(Outcome::Flagged) => EXIT_FLAGGED,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_ERROR
        }
    }
}
