use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("planning error for label {label}: {message}")]
    Planning { label: String, message: String },

    #[error("data error for entry `{id}`: {source}")]
    Data {
        id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn data(id: impl Into<String>, source: Error) -> Self {
        Error::Data {
            id: id.into(),
            source: Box::new(source),
        }
    }
}
