use std::path::PathBuf;

use rnnglab_core::decode::DecodeError;
use rnnglab_core::models::ModelError;
use rnnglab_core::numcore::NumericError;
use rnnglab_core::psych::PsychError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Data(String),
    #[error("provenance mismatch for {what}: expected {expected}, found {found}")]
    Provenance { what: String, expected: String, found: String },
    #[error("numerical failure: {0}")]
    Numeric(String),
}

impl LabError {
    /// 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Usage(_) => 1,
            LabError::Numeric(_) => 3,
            _ => 2,
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> LabError {
        let path = path.into();
        move |source| LabError::Io { path, source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> LabError {
        LabError::Format { path: path.into(), message: message.to_string() }
    }
}

impl From<ModelError> for LabError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Numeric(n) => n.into(),
            other => LabError::Data(other.to_string()),
        }
    }
}

impl From<NumericError> for LabError {
    fn from(e: NumericError) -> Self {
        match e {
            NumericError::NonFiniteGradient { .. } => LabError::Numeric(e.to_string()),
            other => LabError::Data(other.to_string()),
        }
    }
}

impl From<DecodeError> for LabError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Model(m) => m.into(),
            DecodeError::Config(m) => LabError::Usage(m.to_string()),
            other => LabError::Data(other.to_string()),
        }
    }
}

impl From<PsychError> for LabError {
    fn from(e: PsychError) -> Self {
        LabError::Data(e.to_string())
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
