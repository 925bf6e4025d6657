use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("parse error at line {line}: cannot read {field:?} as a number")]
    Parse { line: usize, field: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("input is empty")]
    EmptyInput,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("value out of range: {0}")]
    Range(String),
    #[error("need at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("baseline rand index must be positive, got {0}")]
    DegenerateBaseline(f64),
    #[error("need at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("all x values are equal ({0}); slope is undefined")]
    DegenerateFit(f64),
    #[error("actual value is zero; relative error is undefined")]
    DegenerateActual,
    #[error("not found: {}", .0.display())]
    NotFound(PathBuf),
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// True unless the error was raised while executing a pipeline stage.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Stage { .. })
    }
}
