//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by dataset handling, model training, explanation, and
/// metric computation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("training set contains a single class; {0} needs both classes")]
    SingleClassTrain(String),

    #[error("AUC is undefined: scores cover only one class")]
    UndefinedAuc,

    #[error(
        "weighted design is singular (all proximity weights vanished); \
         increase the kernel width"
    )]
    KernelWidth,

    #[error("exact Shapley enumeration is limited to {limit} features, got {actual}; use sampling mode")]
    EnumerationGuard { limit: usize, actual: usize },

    #[error("background sample is empty")]
    EmptyBackground,

    #[error("agreement score is undefined: {0} attribution vector has zero norm")]
    UndefinedAgreement(String),

    #[error("attribution pairing error: {0}")]
    AttributionPairing(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
