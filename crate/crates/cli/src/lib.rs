//! Batch front-end for the Maxwell elliptic solver: configuration, solves,
//! convergence studies and ellipticity sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
pub mod vtk;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const SOLVER: u8 = 2;
    pub const NOT_ELLIPTIC: u8 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", format_config(.origin, *.line, *.column, .message))]
    Config {
        origin: String,
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },

    #[error("usage: {0}")]
    Usage(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("solver: {0}")]
    Solver(#[from] maxwell_elliptic::Error),
}

fn format_config(origin: &str, line: Option<usize>, column: Option<usize>, message: &str) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!("config error at {origin}:{l}:{c}: {message}"),
        (Some(l), None) => format!("config error at {origin}:{l}: {message}"),
        _ => format!("config error in {origin}: {message}"),
    }
}

impl CliError {
    /// Validation failure of `section.key` (top-level keys use an empty section).
    pub fn config(section: &str, key: &str, message: String) -> Self {
        let path = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        CliError::Config {
            origin: String::new(),
            line: None,
            column: None,
            message: format!("{path}: {message}"),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Usage(_) | CliError::Io { .. } => exit::CONFIG,
            CliError::Solver(_) => exit::SOLVER,
        }
    }
}
