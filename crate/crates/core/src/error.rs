use thiserror::Error;

/// Errors raised by the clustering library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e}, largest {max_eig:e})")]
    NotPositiveDefinite { min_eig: f64, max_eig: f64 },
    #[error("matrix is not positive semi-definite (smallest eigenvalue {min_eig:e})")]
    NotPsd { min_eig: f64 },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("sample covariance is singular (smallest eigenvalue {min_eig:e})")]
    SingularCovariance { min_eig: f64 },
    #[error("matrix is singular (smallest eigenvalue {min_eig:e})")]
    SingularMatrix { min_eig: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("profile likelihood is degenerate: y'Hy/n = {ratio}")]
    DegenerateLikelihood { ratio: f64 },
    #[error("EM denominator is degenerate: <y, Hy>/n = {ratio}")]
    DegenerateDenominator { ratio: f64 },
    #[error("problem too large for exhaustive search: size {size} exceeds {limit}")]
    TooLarge { size: usize, limit: usize },
    #[error("need at least {k} points, found {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("input is not whitened: max |X'X - nI| entry {deviation:e}")]
    NotWhitened { deviation: f64 },
    #[error("label {label} out of range for K = {k}")]
    BadLabelRange { label: usize, k: usize },
    #[error("sample size {n} must be even")]
    OddSampleSize { n: usize },
    #[error("no sign change of the radial gradient found in (0, {upper}]")]
    NoBracket { upper: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
