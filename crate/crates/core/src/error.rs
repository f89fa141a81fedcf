use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A required field is missing or a document does not match its schema.
    #[error("schema error: {0}")]
    Schema(String),

    /// A parsed value violates a documented invariant. `field` names it.
    #[error("validation error: {field} {message}")]
    Validation { field: String, message: String },

    #[error("out of range: {0}")]
    Range(String),

    #[error("unknown scenario: {0}")]
    UnknownScenario(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// True for errors caused by bad user input (files, flags, values) as
    /// opposed to failures during computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::Schema(_)
                | Error::Validation { .. }
                | Error::UnknownScenario(_)
                | Error::Usage(_)
                | Error::Json { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
