use std::path::PathBuf;

use thiserror::Error;

/// Coarse classification used by the command-line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite (violation {0:e})")]
    NotPsd(f64),

    #[error("regularized covariance is numerically singular; increase gamma")]
    SingularMetric,

    #[error("invalid configuration at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("{path}: row {row}, column `{column}`: {reason}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        reason: String,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("malformed document: {0}")]
    Format(String),

    #[error("at lambda = {lambda}: {source}")]
    AtLambda {
        lambda: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NotSymmetric(_) | Error::NotPsd(_) | Error::SingularMetric | Error::NonFinite(_) => {
                ErrorKind::Numerical
            }
            Error::Io { .. } | Error::Format(_) => ErrorKind::Io,
            Error::AtLambda { source, .. } => source.kind(),
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
