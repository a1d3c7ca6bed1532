use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] mixgm::Error),
    #[error(transparent)]
    Solver(#[from] mixgm::error::SolverError),
    #[error("missing value in row {row}, column `{column}`")]
    Missing { row: usize, column: String },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse { row: usize, column: String, value: String },
    #[error("row {row}, column `{column}`: level `{level}` is not in the dictionary")]
    UnseenLevel { row: usize, column: String, level: String },
    #[error("categorical column `{column}` has a single observed level `{level}`")]
    SingleLevel { column: String, level: String },
    #[error("no column named `{0}`")]
    UnknownColumn(String),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, CliError>;
