use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// The inertia matrix is numerically singular for the given parameters.
    #[error("degenerate parameters: |det M| = {det:e} below threshold {threshold:e}")]
    DegenerateParameters { det: f64, threshold: f64 },

    #[error("integration blew up at step {step}")]
    IntegrationBlowup { step: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("unidentifiable: {0}")]
    Unidentifiable(String),

    #[error("{path}: row {row}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite residual while perturbing parameter {index}")]
    NonFiniteJacobian { index: usize },

    #[error("non-finite residual at the initial point")]
    NonFiniteResidual,

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    /// Process exit code for the command-line front end: 2 for usage and
    /// validation problems, 1 for everything that went wrong at runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Parse { .. }
            | Error::Json { .. }
            | Error::LengthMismatch { .. }
            | Error::InsufficientData(_) => 2,
            Error::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
