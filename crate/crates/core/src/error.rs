use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}, dimension {dim}: value {value} outside [{lower}, {upper}]")]
    Domain { row: usize, dim: usize, value: f64, lower: f64, upper: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Objective or constraint returned NaN or an infinity.
    #[error("non-finite {what} at row {row}")]
    NonFinite { row: usize, what: String },

    #[error("degenerate set: {0}")]
    DegenerateSet(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("degenerate scale: all samples are identical")]
    DegenerateScale,

    #[error("no feasible point: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by data that cannot support the requested
    /// computation (empty sublevel sets, zero variance, no feasible point).
    pub fn is_degenerate(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSet(_) | Error::DegenerateVariance(_) | Error::DegenerateScale | Error::Infeasible(_)
        )
    }
}
