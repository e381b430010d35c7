use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the sampling, hull, moment and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient points for full-dimensional symmetric hull: m = {m}, n = {n}")]
    InsufficientPoints { n: usize, m: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate: points do not span R^{0}")]
    DoesNotSpan(usize),

    #[error("degenerate: perturbation required ({0})")]
    PerturbationRequired(String),

    #[error("invalid complex: {0}")]
    InvalidComplex(String),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("matrix is not SPD (pivot {pivot} at index {index})")]
    NotSpd { index: usize, pivot: f64 },

    #[error("rejection oracle disabled at dimension {0}")]
    OracleDisabled(usize),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("trial failed after {attempts} degeneracy re-draws: {last}")]
    TrialFailed { attempts: u32, last: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by floating-point degeneracy or numerical breakdown.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DoesNotSpan(_)
                | Error::PerturbationRequired(_)
                | Error::InvalidComplex(_)
                | Error::NotSpd { .. }
                | Error::TrialFailed { .. }
                | Error::ContractViolation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
