use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Model dump rejected by the text parser.
    #[error("line {line}: key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },

    /// Canonical JSON rejected; `path` is a JSON pointer-like location.
    #[error("{path}: {message}")]
    Schema { path: String, message: String },

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("tree is oblique, sparsify first (node {node} has {nonzeros} nonzero weights)")]
    Oblique { node: usize, nonzeros: usize },

    #[error("importance undefined for oblique splits (node {node})")]
    ObliqueImportance { node: usize },

    #[error("no selectable feature at node {node}")]
    NoSelectableFeature { node: usize },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("dataset: {0}")]
    Data(String),

    #[error("row {row}, column `{column}`: cannot parse {value:?}")]
    Cell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("kendall tau undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
