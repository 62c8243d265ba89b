use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    /// A line in a corpus, score, or prediction file could not be parsed.
    #[error("{}: line {line}: {msg}", path.display())]
    Malformed {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("duplicate tweet id `{id}`")]
    DuplicateId { id: String },

    #[error("tweet `{tweet_id}`: {msg}")]
    InvalidScore { tweet_id: String, msg: String },

    #[error("model `{model}` has no score for tweet `{tweet_id}`")]
    MissingScore { model: String, tweet_id: String },

    #[error("prediction and gold id sets differ in {count} id(s), e.g. {}", sample.join(", "))]
    IdMismatch { count: usize, sample: Vec<String> },

    #[error("model file {}: {source}", path.display())]
    ModelFormat {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}
