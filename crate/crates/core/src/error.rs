use thiserror::Error;

/// Errors produced by the library.
///
/// Numerical instability of a time integration is not an error; it is
/// reported through [`crate::models::Trajectory::stable`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("normal matrix is rank deficient in columns {columns:?}")]
    RankDeficient { columns: Vec<usize> },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("regularization grid is empty")]
    EmptyGrid,

    #[error("no scored candidates to select from")]
    EmptyScores,

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("config error: {0}")]
    Config(String),

    #[error("malformed data file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            found,
        })
    }
}
