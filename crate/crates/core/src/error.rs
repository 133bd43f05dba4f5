use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the completion algorithms, generators and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix data has {len} entries, expected {rows}x{cols}")]
    Shape { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of bounds for dimension {bound}")]
    IndexOutOfBounds { index: usize, bound: usize },

    #[error("duplicate index {0} in a without-replacement index set")]
    DuplicateIndex(usize),

    #[error("basis is not orthonormal (max deviation {deviation:.3e})")]
    NotOrthonormal { deviation: f64 },

    #[error(
        "subsampled basis is rank deficient: rank {rank} < {dim} columns{}",
        column.map(|t| format!(" (stream column {t})")).unwrap_or_default()
    )]
    RankDeficient {
        dim: usize,
        rank: usize,
        column: Option<usize>,
    },

    #[error("column {column} has norm {norm:.6}, outside the accepted unit-norm band")]
    NotUnitNorm { column: usize, norm: f64 },

    #[error("sparse support search needs {needed} combinations, cap is {cap}")]
    CombinatorialBudgetExceeded { needed: u128, cap: u128 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{}:{line}:{column}: {message}", path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<input>".into()))]
    Parse {
        path: Option<PathBuf>,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn with_column(self, t: usize) -> Self {
        match self {
            Error::RankDeficient { dim, rank, .. } => Error::RankDeficient {
                dim,
                rank,
                column: Some(t),
            },
            other => other,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
