use thiserror::Error;

use crate::group_lasso::GroupSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("parse error at row {row}, column `{column}`: {message}")]
    Parse {
        /// 1-based data row (the header is row 0).
        row: usize,
        column: String,
        message: String,
    },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("propensity score {value} at row {row} is outside (0, 1)")]
    PropensityRange { row: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("group lasso did not converge at lambda = {lambda} after {sweeps} sweeps")]
    Convergence {
        lambda: f64,
        sweeps: usize,
        last: Box<GroupSolution>,
    },

    #[error("cannot build folds: {0}")]
    FoldConstruction(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("model format version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u64 },

    #[error("malformed model file: {0}")]
    Format(String),
}
