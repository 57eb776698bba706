use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("time must be positive, got t = {0}")]
    NonPositiveTime(f64),

    #[error("shift alpha = {alpha} must exceed -n = {}", -(*n as f64))]
    InvalidShift { alpha: f64, n: usize },

    #[error("shift alpha = {alpha} is inadmissible for index {index}: eigenvalue {eigenvalue} <= 0")]
    InadmissibleMode {
        alpha: f64,
        index: String,
        eigenvalue: f64,
    },

    #[error("degree cap K = {degree} exceeds grid resolution: {reason}")]
    UnresolvedDegree { degree: usize, reason: String },

    #[error("quadrature needs at least one node")]
    EmptyQuadrature,

    #[error("Monte-Carlo estimate needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("empty region")]
    EmptyRegion,

    #[error("empty family")]
    EmptyFamily,

    #[error("coordinate j = {j} out of range for dimension n = {n}")]
    CoordinateOutOfRange { j: usize, n: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}

pub(crate) fn check_coordinate(j: usize, n: usize) -> Result<()> {
    if j < n {
        Ok(())
    } else {
        Err(Error::CoordinateOutOfRange { j, n })
    }
}
