//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma must lie strictly inside (0, 1), got {0}")]
    InvalidGamma(f64),

    #[error("level must be at least 1")]
    LevelZero,

    #[error("level {requested} exceeds the memory cap {cap} (set SPECTRAL_CANTOR_MAX_LEVEL to raise it)")]
    LevelTooLarge { requested: usize, cap: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not self-adjoint (deviation {0:.3e})")]
    NotSelfAdjoint(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
