use std::path::PathBuf;

use thiserror::Error;

/// Hard errors: bad input, violated preconditions, I/O.
///
/// Resampler failures that an experiment should record rather than abort on
/// are reported through [`crate::resample::ResampleFailure`] instead.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    /// `row` and `column` are 1-based positions in the source file.
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no neighbors available: need at least 2 points, got {0}")]
    NoNeighbors(usize),

    #[error(
        "score table has a missing cell (row {row:?}, method {method:?}); \
         resolve it with a missing-cell policy (worst-rank or drop-row) first"
    )]
    MissingCell { row: String, method: String },

    #[error("resampling failed: {0}")]
    Resample(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
