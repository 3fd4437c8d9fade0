use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate identifier `{id}` in {path}")]
    DuplicateId { path: PathBuf, id: String },

    #[error("topic `{0}` is referenced in qrels but missing from the topic file")]
    MissingTopic(String),

    #[error("document `{0}` is not present in the corpus")]
    MissingDocument(String),

    #[error("invalid run: {0}")]
    InvalidRun(String),

    #[error("collection is empty")]
    EmptyCollection,

    #[error("topic `{0}` has no candidates left to rank")]
    EmptyTopic(String),

    #[error("topic `{topic}` has {found} relevant studies, at least {required} needed")]
    InsufficientSeeds {
        topic: String,
        found: usize,
        required: usize,
    },

    #[error("topic `{topic}`: not enough {side} documents ({found}, need {required})")]
    InsufficientDocuments {
        topic: String,
        side: &'static str,
        found: usize,
        required: usize,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("metric `{0}` is undefined for this run")]
    UndefinedMetric(&'static str),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("annotator transport error: {0}")]
    Transport(String),

    #[error("annotator protocol error: {0}")]
    Protocol(String),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Short machine-readable tag for error summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::DuplicateId { .. } => "duplicate_id",
            Error::MissingTopic(_) => "missing_topic",
            Error::MissingDocument(_) => "missing_document",
            Error::InvalidRun(_) => "invalid_run",
            Error::EmptyCollection => "empty_collection",
            Error::EmptyTopic(_) => "empty_topic",
            Error::InsufficientSeeds { .. } => "insufficient_seeds",
            Error::InsufficientDocuments { .. } => "insufficient_documents",
            Error::Contract(_) => "contract",
            Error::UndefinedMetric(_) => "undefined_metric",
            Error::DegenerateTest(_) => "degenerate_test",
            Error::Transport(_) => "transport",
            Error::Protocol(_) => "protocol",
            Error::Config { .. } => "config",
        }
    }
}
