use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("expected {expected} entries for a {rows}x{cols} matrix, got {got}")]
    EntryCount {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("norm exponent p = {0} is outside [1, inf]")]
    InvalidNorm(f64),
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("dimension {dim} exceeds the configured cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("QR iteration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("λ = {lambda} is in the spectrum (A - λI singular to tolerance)")]
    InSpectrum { lambda: Complex64 },
    #[error("spectrum meets the imaginary axis (eigenvalue {eigenvalue})")]
    AxisSpectrum { eigenvalue: Complex64 },
    #[error("invalid decay envelope: rate {rate} must be positive")]
    InvalidDecay { rate: f64 },
    #[error("quadrature tolerance {tolerance:e} not reached within {intervals} intervals (estimate {estimate:e})")]
    ToleranceNotReached {
        tolerance: f64,
        estimate: f64,
        intervals: usize,
    },
    #[error("tail envelope {envelope} never dropped below the best value {best}")]
    EnvelopeNotDominated { envelope: f64, best: f64 },
    #[error("system is not exponentially stable (spectral abscissa {abscissa})")]
    Unstable { abscissa: f64 },
    #[error("system is not hyperbolic (eigenvalue within {gap:e} of the imaginary axis)")]
    NonHyperbolic { gap: f64 },
    #[error("unsupported norm combination: {0}")]
    UnsupportedNorm(String),
    #[error("transfer function vanishes at s = {0}")]
    ZeroTransfer(f64),
    #[error("search budget exhausted before any valid ratio")]
    BudgetExhausted,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
