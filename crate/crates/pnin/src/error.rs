use std::path::PathBuf;

use serde::Serialize;

/// Failure categories of the command line, each with its exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Config,
    Data,
    Numerical,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Numerical => 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    pub path: Option<PathBuf>,
    pub line: Option<u64>,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Config,
            message: message.into(),
            path: None,
            line: None,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::Data,
            message: message.into(),
            path: None,
            line: None,
        }
    }

    pub fn at(mut self, path: impl Into<PathBuf>, line: Option<u64>) -> Self {
        self.path = Some(path.into());
        self.line = line;
        self
    }

    pub fn exit_code(&self) -> i32 {
        self.kind.exit_code()
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "error": {
                "kind": self.kind,
                "exit_code": self.exit_code(),
                "message": self.message,
                "path": self.path,
                "line": self.line,
            }
        })
    }
}

impl From<pnin_core::Error> for CliError {
    fn from(e: pnin_core::Error) -> Self {
        use pnin_core::Error as E;
        let kind = match &e {
            E::InvalidParams(_) | E::GridMissingCenter | E::WindowTooShort { .. } => {
                ErrorKind::Config
            }
            E::EmptyTrace
            | E::MalformedTrace(_)
            | E::NotDetrended { .. }
            | E::MissingCenter
            | E::TooFewTraces { .. } => ErrorKind::Data,
            E::SingularDrift { .. }
            | E::SingularLiftedDrift { .. }
            | E::DegenerateVariance { .. }
            | E::UnstableIntegration { .. }
            | E::NoPeak
            | E::UnbracketedCrossing
            | E::NotSaturated { .. }
            | E::IllConditionedFit { .. } => ErrorKind::Numerical,
        };
        CliError {
            kind,
            message: e.to_string(),
            path: None,
            line: None,
        }
    }
}

/// Output files that cannot be written are reported as data errors.
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
