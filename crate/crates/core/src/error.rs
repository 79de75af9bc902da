// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by the toolkit.
///
/// Variants are grouped by the kind of failure rather than by module so that
/// callers (the CLI in particular) can map them onto exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at `{key}`: {reason}")]
    Parse { key: String, reason: String },

    #[error("structural error: {0}")]
    Structure(String),

    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("point ({x}, {y}) is out of bounds")]
    OutOfBounds { x: f64, y: f64 },

    #[error("nodata encountered while sampling at ({x}, {y})")]
    Nodata { x: f64, y: f64 },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty intersection: {0}")]
    EmptyIntersection(String),

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),

    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("incomplete data: {0}")]
    IncompleteData(String),

    #[error("format error in {}: {reason}", file.display())]
    Format { file: PathBuf, reason: String },

    #[error("integrity error: field `{field}` {reason}")]
    Integrity { field: String, reason: String },

    #[error("insufficient subsets: {0}")]
    InsufficientSubsets(String),

    #[error("unknown subset `{0}`")]
    UnknownSubset(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short kebab-case name of the failure kind.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Structure(_) => "structure",
            Error::UnsupportedGeometry(_) => "unsupported-geometry",
            Error::UnsupportedFormat(_) => "unsupported-format",
            Error::OutOfBounds { .. } => "out-of-bounds",
            Error::Nodata { .. } => "nodata",
            Error::EmptyInput(_) => "empty-input",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::EmptyIntersection(_) => "empty-intersection",
            Error::DegenerateSeries(_) => "degenerate-series",
            Error::Underdetermined(_) => "underdetermined",
            Error::InsufficientData(_) => "insufficient-data",
            Error::IncompleteData(_) => "incomplete-data",
            Error::Format { .. } => "format",
            Error::Integrity { .. } => "integrity",
            Error::InsufficientSubsets(_) => "insufficient-subsets",
            Error::UnknownSubset(_) => "unknown-subset",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
