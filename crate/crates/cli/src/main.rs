//! `erule`: command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or ingest error, 3 computation
//! error. Warnings go to stderr and into the JSON report; they never change
//! the exit code.

mod args;
mod commands;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Format};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] erule::Error),
    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_data_error() => 2,
            CliError::Core(_) => 3,
            CliError::Output { .. } => 2,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // help and --version go to stdout and are not failures
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let outcome = commands::run(&cli.global, &cli.command)?;
    for w in &outcome.report.warnings {
        eprintln!("warning: {w}");
    }
    let bytes = match cli.global.format {
        Format::Json => outcome
            .render_json()
            .map_err(|e| erule::Error::Serialization(e.to_string()))?,
        Format::Csv => outcome
            .table
            .to_csv()
            .map_err(|e| erule::Error::Serialization(e.to_string()))?,
    };
    match &cli.global.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| CliError::Output {
            path: path.clone(),
            source,
        }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)
                .and_then(|()| out.flush())
                .map_err(|source| CliError::Output {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
