use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, TomoError>;

/// Broad error category, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Invalid parameters or configuration.
    Usage,
    /// Malformed, missing or unusable input data.
    Data,
    /// The numerics broke down (degenerate measurements, vanishing trace).
    Numerical,
}

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(String),

    #[error("degenerate measurement at record {index}: probability {probability:e} is at the floor")]
    DegenerateMeasurement { index: usize, probability: f64 },

    #[error("trace of R·ρ·R is {0:e}, below the normalization floor")]
    VanishingTrace(f64),

    #[error("state truncation: tail weight {tail:e} above n_max = {n_max} exceeds {limit:e}")]
    TruncationTail { tail: f64, n_max: usize, limit: f64 },

    #[error("bootstrap replica {replica} failed: {source}")]
    Replica {
        replica: usize,
        #[source]
        source: Box<TomoError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error(s):\n{details}")]
    Parse { path: PathBuf, details: String },
}

impl TomoError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        TomoError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            TomoError::InvalidParameter { .. } | TomoError::DimensionMismatch { .. } => {
                ErrorClass::Usage
            }
            TomoError::NonFinite(_)
            | TomoError::EmptyDataset
            | TomoError::InvalidDensityMatrix(_)
            | TomoError::TruncationTail { .. }
            | TomoError::Io { .. }
            | TomoError::Parse { .. } => ErrorClass::Data,
            TomoError::DegenerateMeasurement { .. } | TomoError::VanishingTrace(_) => {
                ErrorClass::Numerical
            }
            TomoError::Replica { source, .. } => source.class(),
        }
    }
}
