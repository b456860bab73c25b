use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate index code `{0}`")]
    DuplicateIndex(String),

    #[error("index `{0}` has no metadata row")]
    MissingMetadata(String),

    #[error("line {line}: cannot parse date `{value}`")]
    BadDate { line: usize, value: String },

    #[error("line {line}: cannot parse value `{value}` in column `{column}`")]
    BadValue {
        line: usize,
        column: String,
        value: String,
    },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("index `{0}` has no observations")]
    EmptyIndex(String),

    #[error("every date was removed by the missing-day rule")]
    AllDaysRemoved,

    #[error("non-positive price {price} for index `{index}` on {date}")]
    NonPositivePrice {
        index: String,
        date: String,
        price: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{0} did not converge within {1} iterations")]
    NoConvergence(&'static str, usize),

    #[error("unbalanced transport masses ({0} vs {1})")]
    UnbalancedMass(f64, f64),

    #[error("transport problem infeasible")]
    Infeasible,

    #[error("frame ending {date}: {source}")]
    Frame {
        date: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
