use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the lab. Each variant maps onto one CLI exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solution blew up at step {step} (t = {time})")]
    BlowUp { step: usize, time: f64 },

    #[error("quality check failed: {0}")]
    Quality(String),

    #[error("truncation diagnostic failed: {0}")]
    Truncation(String),

    #[error("quadrature check failed: {0}")]
    Quadrature(String),

    #[error("budget exhausted: {0}")]
    Budget(String),

    #[error("refusing to resume: {0}")]
    Resume(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Format(_) => 2,
            Error::Domain(_)
            | Error::BlowUp { .. }
            | Error::Quality(_)
            | Error::Truncation(_)
            | Error::Quadrature(_) => 3,
            Error::Budget(_) => 4,
            Error::Resume(_) => 5,
            Error::Io { .. } => 1,
        }
    }
}
