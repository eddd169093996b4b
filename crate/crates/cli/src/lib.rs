//! Command-line front end for `symdesk-core`: loads model files, runs the
//! engines, and writes CSV/JSON results with a digest manifest.

// `!(x > 0.0)` style guards are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod error;
pub mod formats;
pub mod output;
pub mod report;

use std::time::Instant;

pub use cli::{Cli, Command};
pub use error::CliError;
pub use report::{Check, RunReport};

use output::OutputDir;

pub const SCHEMA_VERSION: &str = "1";

/// Runs one command into `cli.out`. The report and manifest are written
/// whether or not the checks pass.
pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let mut out = OutputDir::create(&cli.out)?;
    let mut command = serde_json::to_value(&cli.command).expect("commands serialize");
    normalize_floats(&mut command);
    let mut report = RunReport::new(command);
    match &cli.command {
        Command::Lie3(args) => commands::lie3::run(args, &mut out, &mut report)?,
        Command::Pendulum { cmd } => commands::pendulum::run(cmd, &mut out, &mut report)?,
        Command::Dh { cmd } => commands::dh::run(cmd, &mut out, &mut report)?,
        Command::Spectra { cmd } => commands::spectra::run(cmd, &mut out, &mut report)?,
    }
    report.files = out.files().to_vec();
    out.write_json(report::REPORT, &report.to_json())?;
    out.finish(SCHEMA_VERSION)?;
    report.wall_time = start.elapsed();
    Ok(report)
}

/// Rewrites every non-integer JSON number in the output float format.
fn normalize_floats(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if !n.is_i64() && !n.is_u64() => {
            if let Some(x) = n.as_f64() {
                *v = output::num(x);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(normalize_floats),
        Value::Object(m) => m.values_mut().for_each(normalize_floats),
        _ => {}
    }
}
