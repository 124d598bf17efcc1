//! Command-line driver for the XXZ laser: reads a JSON run configuration or a
//! named preset, evaluates every grid point and writes a long-format CSV table.

pub mod config;
pub mod presets;
pub mod runner;
pub mod table;

use std::path::Path;

use xxz_laser::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown preset `{name}`; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} point(s) failed, first: {first}; failures listed in {manifest}")]
    Partial { failed: usize, total: usize, first: String, manifest: String, code: u8 },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    /// 2 for bad input, 1 for I/O, 3 for solver failures and 4 when a point
    /// exceeded the exact solver's size or cutoff budget.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::UnknownPreset { .. } => 2,
            CliError::Io { .. } => 1,
            CliError::Partial { code, .. } => *code,
        }
    }
}

pub(crate) fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::SizeBudget { .. } | Error::CutoffBudget { .. } => 4,
        Error::InvalidParameter { .. } | Error::SiteOutOfRange { .. } => 2,
        Error::Trajectory { source, .. } => exit_code_for(source),
        _ => 3,
    }
}
