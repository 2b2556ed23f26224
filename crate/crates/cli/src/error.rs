use serde::Serialize;
use thiserror::Error;

use oamring::ErrorKind;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] oamring::Error),

    #[error("non-finite value in {file}, column {column}")]
    NonFinite { file: String, column: String },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, err: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), message: err.to_string() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "configuration",
            CliError::Core(e) => match e.kind() {
                ErrorKind::Configuration => "configuration",
                ErrorKind::Numerical => "numerical",
                ErrorKind::Truncation => "truncation",
            },
            CliError::NonFinite { .. } => "numerical",
            CliError::Io { .. } => "io",
        }
    }

    /// 2 configuration, 3 numerical tolerance, 4 truncation, 1 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "configuration" => 2,
            "numerical" => 3,
            "truncation" => 4,
            _ => 1,
        }
    }

    pub fn record(&self, scenario: Option<&str>, manifest_hash: Option<&str>) -> ErrorRecord {
        ErrorRecord {
            status: "error",
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
            scenario: scenario.map(str::to_string),
            manifest_hash: manifest_hash.map(str::to_string),
        }
    }
}

/// Machine-readable failure record written as `error.json`.
#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub status: &'static str,
    pub kind: &'static str,
    pub exit_code: i32,
    pub message: String,
    pub scenario: Option<String>,
    pub manifest_hash: Option<String>,
}
