use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: max |A - A^T| = {deviation:e} exceeds {tolerance:e}")]
    Asymmetric { deviation: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("query budget m = {m} leaves block {block} with no columns")]
    BudgetTooSmall { block: &'static str, m: usize },

    #[error("Ritz value {value:e} is at or below the spectrum floor {floor:e}")]
    SpectrumFloor { value: f64, floor: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset {dataset}: {source}")]
    Dataset {
        dataset: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
