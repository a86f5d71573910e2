use std::path::{Path, PathBuf};

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Every label has zero (relative) probability mass at some input, so no
    /// conditional distribution exists there.
    #[error("zero probability mass: {0}")]
    ZeroMass(String),

    /// An argument is outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// The generative draw rejected this many candidates in a row; the
    /// acceptance mass at this input is (near) zero.
    #[error("rejection limit reached after {0} consecutive rejections")]
    RejectionLimit(u64),

    /// A cell failed to parse.
    #[error("parse error at data row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    /// The file parsed but violates the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn zero_mass(msg: impl Into<String>) -> Self {
        Error::ZeroMass(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn schema(msg: impl Into<String>) -> Self {
        Error::Schema(msg.into())
    }

    /// Schema violation attributable to one data row (1-based, header excluded).
    pub(crate) fn schema_at(row: usize, msg: impl std::fmt::Display) -> Self {
        Error::Schema(format!("data row {row}: {msg}"))
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
