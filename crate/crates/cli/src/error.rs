use std::path::PathBuf;

use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("column '{0}' not found in header")]
    MissingColumn(String),

    #[error("line {line}: missing value in column '{column}'")]
    MissingValue { line: u64, column: String },

    #[error("line {line}: column '{column}' has non-numeric value '{value}'")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },

    #[error("line {line}: historical flag must be 0 or 1, got '{value}'")]
    InvalidFlag { line: u64, value: String },

    #[error("line {line}: binomial outcome must be 0 or 1, got '{value}'")]
    InvalidOutcome { line: u64, value: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{failed} of {total} simulation cells failed")]
    CellFailures { failed: usize, total: usize },

    #[error(transparent)]
    Core(#[from] psborrow_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Csv(_) => "csv",
            CliError::MissingColumn(_) => "missing_column",
            CliError::MissingValue { .. } => "missing_value",
            CliError::NonNumeric { .. } => "non_numeric",
            CliError::InvalidFlag { .. } => "invalid_flag",
            CliError::InvalidOutcome { .. } => "invalid_outcome",
            CliError::Config(_) => "config",
            CliError::Json(_) => "json",
            CliError::CellFailures { .. } => "cell_failures",
            CliError::Core(e) => e.kind(),
        }
    }

    /// Machine-readable error report printed by the binary.
    pub fn to_json(&self) -> serde_json::Value {
        let line = match self {
            CliError::MissingValue { line, .. }
            | CliError::NonNumeric { line, .. }
            | CliError::InvalidFlag { line, .. }
            | CliError::InvalidOutcome { line, .. } => Some(*line),
            _ => None,
        };
        json!({ "error": { "kind": self.kind(), "message": self.to_string(), "line": line } })
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
