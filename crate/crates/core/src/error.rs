use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample")]
    EmptySample,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("distribution is not realizable by the class")]
    NotRealizable,

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("horizon of {0} rounds exhausted")]
    HorizonExhausted(usize),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("expert pool of size exp({exponent:.3}) exceeds ceiling {ceiling}")]
    InfeasiblePool { exponent: f64, ceiling: u64 },

    #[error("sample complexity calibration exceeded ceiling m = {0}")]
    CalibrationFailed(usize),

    #[error("label {label} at round {round} is not consistent with any hypothesis in the class")]
    NonRealizableLabel { round: usize, label: u8 },

    #[error("{0}")]
    Config(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
