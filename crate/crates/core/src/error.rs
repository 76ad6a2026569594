use thiserror::Error;

/// Errors raised by the embedding pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("exponent p = {0} is outside [1, inf)")]
    InvalidExponent(f64),

    #[error("non-finite coefficient {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cannot normalize the zero vector")]
    ZeroVector,

    #[error("vector is off the unit sphere of l_{p}: norm {norm}")]
    OffSphere { p: f64, norm: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "kernel is not of negative type: eigenvalue {eigenvalue:e} below floor \
         (largest eigenvalue {largest:e})"
    )]
    NotNegativeType { eigenvalue: f64, largest: f64 },

    #[error("calibration failed at level {level}: {reason}")]
    Calibration { level: usize, reason: String },

    #[error("unknown point {0}")]
    UnknownPoint(String),
}

impl Error {
    /// Construction failures, as opposed to bad input.
    pub fn is_construction(&self) -> bool {
        matches!(self, Error::NotNegativeType { .. } | Error::Calibration { .. })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
