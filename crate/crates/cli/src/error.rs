use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;
use transonic::conjugation::ConjugationError;
use transonic::gasdyn::GasError;
use transonic::illposedness::IllposednessError;
use transonic::microlocal::MicrolocalError;
use transonic::series::{CkError, SeriesError};

/// A node whose state the gas model rejects.
#[derive(Debug, Clone, Serialize)]
pub struct RowIssue {
    pub row: Option<usize>,
    pub x: f64,
    #[serde(rename = "T")]
    pub t: f64,
    pub message: String,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} inadmissible state(s) in the field", .0.len())]
    Inadmissible(Vec<RowIssue>),
    #[error(transparent)]
    Gas(#[from] GasError),
    #[error(transparent)]
    Microlocal(#[from] MicrolocalError),
    #[error(transparent)]
    Ck(#[from] CkError),
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Conjugation(#[from] ConjugationError),
    #[error(transparent)]
    Illposedness(#[from] IllposednessError),
}

/// Machine-readable form written to stderr.
#[derive(Debug, Serialize)]
pub struct Diagnostic {
    pub status: &'static str,
    pub kind: &'static str,
    pub module: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub row: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<RowIssue>,
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    fn kind_and_module(&self) -> (&'static str, &'static str) {
        match self {
            CliError::Usage(_) => ("usage", "cli"),
            CliError::Config { .. } => ("config", "cli"),
            CliError::Io { .. } => ("io", "cli"),
            CliError::Inadmissible(_) => ("inadmissible_state", "gasdyn"),
            CliError::Gas(GasError::Row { .. } | GasError::Field(_)) => ("schema", "gasdyn"),
            CliError::Gas(_) => ("gas_model", "gasdyn"),
            CliError::Microlocal(_) => ("microlocal", "microlocal"),
            CliError::Ck(_) | CliError::Series(_) => ("series", "series"),
            CliError::Conjugation(ConjugationError::NotElliptic(_)) => ("not_elliptic", "conjugation"),
            CliError::Conjugation(_) => ("conjugation", "conjugation"),
            CliError::Illposedness(_) => ("illposedness", "illposedness"),
        }
    }

    pub fn diagnostic(&self) -> Diagnostic {
        let (kind, module) = self.kind_and_module();
        let row = match self {
            CliError::Gas(GasError::Row { row, .. }) => Some(*row),
            _ => None,
        };
        let rows = match self {
            CliError::Inadmissible(r) => r.clone(),
            _ => Vec::new(),
        };
        Diagnostic {
            status: "error",
            kind,
            module,
            message: self.to_string(),
            row,
            rows,
        }
    }
}
