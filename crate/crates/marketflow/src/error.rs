use std::fmt;
use std::io;
use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// One located problem, in the shape the CLI prints and the HTTP API returns.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
    /// Dotted path into the scenario document (`behavior.wta`,
    /// `panel.perf[0][2][1]`), or a `file:line` location for CSV input.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.path {
            Some(path) => write!(f, "error[{}] {}: {}", self.code, path, self.message),
            None => write!(f, "error[{}] {}", self.code, self.message),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}: {message}")]
    Domain { path: String, message: String },
    #[error("{} validation error(s); first: {}", .0.len(), .0[0].message)]
    Validation(Vec<Diagnostic>),
    #[error("{location}: {message}")]
    Csv { location: String, message: String },
    #[error("{what} exceeds the limit: {detail}")]
    Limit { what: &'static str, detail: String },
    #[error("{kind} not found: {name}")]
    NotFound { kind: &'static str, name: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Model(#[from] marketflow_core::Error),
}

impl Error {
    pub fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn domain(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Domain {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn csv(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Csv {
            location: location.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::Syntax { .. } => "syntax",
            Error::Schema { .. } => "schema",
            Error::Domain { .. } => "domain",
            Error::Validation(_) => "validation",
            Error::Csv { .. } => "csv",
            Error::Limit { .. } => "limit",
            Error::NotFound { .. } => "not_found",
            Error::Io { .. } => "io",
            Error::Model(_) => "model",
        }
    }

    pub fn path(&self) -> Option<String> {
        match self {
            Error::Syntax { line, column, .. } => Some(format!("{line}:{column}")),
            Error::Schema { path, .. } | Error::Domain { path, .. } => Some(path.clone()),
            Error::Validation(d) => d.first().and_then(|d| d.path.clone()),
            Error::Csv { location, .. } => Some(location.clone()),
            Error::Io { path, .. } => Some(path.display().to_string()),
            _ => None,
        }
    }

    /// Every located problem carried by this error; a single entry except
    /// for validation failures.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        match self {
            Error::Validation(d) => d.clone(),
            Error::Syntax { message, .. }
            | Error::Schema { message, .. }
            | Error::Domain { message, .. }
            | Error::Csv { message, .. } => vec![Diagnostic {
                code: self.code(),
                message: message.clone(),
                path: self.path(),
            }],
            other => vec![Diagnostic {
                code: other.code(),
                message: other.to_string(),
                path: other.path(),
            }],
        }
    }
}
