use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in input")]
    NonFinite,

    #[error("invalid hypercube: {0}")]
    InvalidHypercube(String),

    #[error("scale factor must be positive, got {0}")]
    InvalidScaleFactor(f64),

    #[error("hypercubes do not intersect")]
    Disjoint,

    #[error("point lies outside the hypercube")]
    PointOutside,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no observations recorded yet")]
    NoObservations,

    #[error("empty proposal list")]
    NoProposals,

    #[error("system has no context agents")]
    NoAgents,

    #[error("dataset error: {0}")]
    Data(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("class `{class}` has {count} members, fewer than k={k}")]
    ClassTooSmall { class: String, count: usize, k: usize },

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),

    #[error("{path}: {source}")]
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
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error stems from user-supplied configuration rather than
    /// from data or the runtime environment.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub(crate) fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub(crate) fn ensure_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}
