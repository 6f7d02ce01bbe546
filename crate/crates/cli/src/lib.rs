//! The `nil` command line: configuration, dispatch, reports and artifact output.

pub mod commands;
pub mod config;
pub mod error;
pub mod inputs;
pub mod report;
pub mod selftest;

use std::io::Write;
use std::path::{Path, PathBuf};

pub use config::{Cli, Command, ConfigFile, LatticeAction};
pub use error::{CliError, Result};
pub use report::{Check, Report};

/// A finished run: its report and the bytes it wants written.
#[derive(Debug)]
pub struct Outcome {
    pub report: Report,
    pub report_path: Option<PathBuf>,
    /// Destination (standard output when `None`) and contents.
    pub artifacts: Vec<(Option<PathBuf>, Vec<u8>)>,
}

impl Outcome {
    pub fn new(report: Report, report_path: Option<PathBuf>) -> Self {
        Self { report, report_path, artifacts: Vec::new() }
    }

    pub fn artifact(mut self, path: Option<PathBuf>, bytes: Vec<u8>) -> Self {
        self.artifacts.push((path, bytes));
        self
    }

    pub fn exit_code(&self) -> i32 {
        if self.report.pass {
            0
        } else {
            1
        }
    }

    /// Writes the artifacts, then the report: to its path if given, otherwise to standard
    /// output unless an artifact already went there, in which case to standard error.
    /// The selftest report is its own artifact and is not repeated.
    pub fn emit(&self) -> Result<()> {
        let mut stdout_used = false;
        for (path, bytes) in &self.artifacts {
            match path {
                Some(p) => write_file(p, bytes)?,
                None => {
                    stdout_used = true;
                    std::io::stdout().write_all(bytes).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e })?;
                }
            }
        }
        if self.report.command == "selftest" {
            return Ok(());
        }
        let json = self.report.to_json();
        match &self.report_path {
            Some(p) => write_file(p, json.as_bytes()),
            None if stdout_used => {
                eprint!("{json}");
                Ok(())
            }
            None => std::io::stdout().write_all(json.as_bytes()).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e }),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Resolves the configuration and runs the command without writing anything.
pub fn run(cli: Cli) -> Result<Outcome> {
    let file = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Flow(a) => commands::flow(&config::FlowConfig::resolve(a, file.flow)?),
        Command::Stability(a) => commands::stability(&config::StabilityRunConfig::resolve(a, file.stability)?),
        Command::Round(a) => commands::round_field(&config::RoundConfig::resolve(a, file.round)?),
        Command::Lattice { action: LatticeAction::Classify(a) } => commands::classify(&config::ClassifyConfig::resolve(a, file.lattice)?),
        Command::Develop(a) => commands::develop(&config::DevelopConfig::resolve(a, file.develop)?),
        Command::Selftest(a) => selftest::selftest(&config::SelftestConfig::resolve(a, file.selftest)?),
    }
}
