use thiserror::Error;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("truncation region numerically infeasible: {0}")]
    Infeasible(String),
    #[error("sampler budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("tilting sampler fallback needed: {0}")]
    FallbackNeeded(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
