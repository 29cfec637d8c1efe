use thiserror::Error;

/// Errors raised by the detector library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("input is not Hermitian (defect {defect:e} exceeds {tolerance:e})")]
    NonHermitianInput { defect: f64, tolerance: f64 },

    #[error("invalid Breuer-Hall matrix: {0}")]
    InvalidU(String),

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("normalization trace {0:e} is too close to zero")]
    DegenerateNormalization(f64),

    #[error("need {needed} moments, have {available}")]
    InsufficientMoments { needed: usize, available: usize },

    #[error("trace-annihilating map is degenerate (largest marginal eigenvalue {0:e})")]
    DegenerateTA(f64),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("verdict is {verdict} at both ends of [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64, verdict: bool },

    #[error("verdict is not monotone in [{lo}, {hi}]: {changes} changes in pre-scan")]
    NonMonotone { lo: f64, hi: f64, changes: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
