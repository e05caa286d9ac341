use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An interval or point falls outside the domain of the function it is used with.
    #[error("domain error: {0}")]
    Domain(String),

    /// An argument violates the documented contract of an operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The weight produced a non-finite value.
    #[error("evaluation of {weight} overflowed at argument {value}")]
    Evaluation { weight: String, value: f64 },

    /// A lemma or operation precondition does not hold for the given data.
    #[error("precondition violated: {0}")]
    Contract(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
