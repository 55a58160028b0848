use thiserror::Error;

pub type Result<T> = std::result::Result<T, MagflowError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagflowError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("gradient norm {norm:e} below regularity threshold {threshold:e}")]
    Regularity { norm: f64, threshold: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("numerical failure at t = {time}: {message}")]
    Numerical { time: f64, message: String },

    #[error("projection did not converge after {iterations} iterations (|f - c| trace: {trace:?})")]
    Projection { iterations: usize, trace: Vec<f64> },

    #[error("r = {r} left the domain ({lo}, {hi})")]
    Domain { r: f64, lo: f64, hi: f64 },

    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for MagflowError {
    fn from(e: std::io::Error) -> Self {
        MagflowError::Io(e.to_string())
    }
}

impl From<csv::Error> for MagflowError {
    fn from(e: csv::Error) -> Self {
        MagflowError::Io(e.to_string())
    }
}

impl MagflowError {
    /// Attaches a time stamp to step/projection failures raised without one.
    pub(crate) fn at_time(self, time: f64) -> Self {
        match self {
            MagflowError::Numerical { message, .. } => MagflowError::Numerical { time, message },
            MagflowError::Projection { iterations, trace } => MagflowError::Numerical {
                time,
                message: format!(
                    "projection did not converge after {iterations} iterations (|f - c| trace: {trace:?})"
                ),
            },
            MagflowError::Regularity { norm, threshold } => MagflowError::Numerical {
                time,
                message: format!("gradient norm {norm:e} below regularity threshold {threshold:e}"),
            },
            MagflowError::Domain { r, lo, hi } => MagflowError::Numerical {
                time,
                message: format!("r = {r} left the domain ({lo}, {hi})"),
            },
            other => other,
        }
    }

    /// True for failures of the numerical machinery (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            MagflowError::Numerical { .. }
                | MagflowError::Projection { .. }
                | MagflowError::Regularity { .. }
                | MagflowError::Domain { .. }
        )
    }
}
