use thiserror::Error;

/// Errors raised by mesh construction, crack handling, solves and audits.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid boundary partition: {0}")]
    InvalidPartition(String),
    #[error("invalid reference: {0}")]
    InvalidReference(String),
    #[error("invalid crack: {0}")]
    InvalidCrack(String),
    #[error("conjugate gradients did not converge after {iterations} iterations (relative residual {residual:e})")]
    NumericalFailure { iterations: usize, residual: f64 },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("enumeration refused: about {estimate} candidates exceed the limit of {limit}")]
    BudgetExceeded { estimate: u128, limit: u128 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
