use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("value out of range: {0}")]
    Range(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate target: {0}")]
    Degenerate(String),

    #[error("undefined contrast: distinguishable rate is zero")]
    UndefinedContrast,

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("phase stepping needs at least 3 steps, got {0}")]
    InsufficientSteps(usize),

    #[error("malformed file {path}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the error comes from the physics (a degenerate target or an
    /// undefined contrast) rather than from bad input.
    pub fn is_physics_degenerate(&self) -> bool {
        matches!(self, Error::Degenerate(_) | Error::UndefinedContrast)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
