use thiserror::Error;

/// Errors raised by the quadrature, energy and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KqError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two points coincide where an energy or kernel term is singular.
    #[error("singular configuration: points {i} and {j} coincide")]
    Singularity { i: usize, j: usize },

    /// A coordinate sits at or beyond a barrier of the regularizer.
    #[error("point {point} coordinate {coord} = {value} is outside the barrier interval ({lo}, {hi})")]
    Domain {
        point: usize,
        coord: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A quantity that is non-negative in exact arithmetic came out clearly negative.
    #[error("numerical breakdown in {context}: value {value:e} is below the roundoff floor")]
    Conditioning { context: &'static str, value: f64 },

    #[error("kernel matrix is numerically singular at maximum jitter (smallest pivot {min_pivot:e})")]
    SingularMatrix { min_pivot: f64 },

    #[error("quadrature did not reach tolerance: estimate {estimate:e}, error {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("point-wise descent aborted at sweep {sweep}, point {index}: {source}")]
    Descent {
        sweep: usize,
        index: usize,
        source: Box<KqError>,
    },

    #[error("sequential selection failed at step {step}: {source}")]
    Selection { step: usize, source: Box<KqError> },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, KqError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(KqError::InvalidArgument(msg.into()))
}
