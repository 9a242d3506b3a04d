use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("norm {0} cannot be decided exactly")]
    InexactNorm(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("size cap exceeded: {requested} points requested, cap is {cap}")]
    SizeCap { requested: u64, cap: u64 },

    #[error("resample budget exhausted after {attempts} attempts: {witness}")]
    ResampleExhausted { attempts: u64, witness: String },

    #[error("unknown point id {0}")]
    UnknownPoint(u64),

    #[error("length mismatch: {left} points vs {right} images")]
    LengthMismatch { left: usize, right: usize },

    #[error("images {0} and {1} coincide, map is not injective")]
    DuplicateImage(usize, usize),

    #[error("session mismatch: {0}")]
    SessionMismatch(String),

    #[error("ambiguous decomposition: {0}")]
    Ambiguous(String),

    #[error("not converged: {0}")]
    NotConverged(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
