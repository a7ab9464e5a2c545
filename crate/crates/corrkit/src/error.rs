//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("not column-stochastic: {0}")]
    NotStochastic(String),
    #[error("mixture weights invalid: {0}")]
    WeightSum(String),
    #[error("{what}: {count} exceeds cap {cap}")]
    CapExceeded { what: &'static str, count: u128, cap: u128 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("output not normalized: {0}")]
    NotNormalized(String),
    #[error("linear program failed: {0}")]
    Lp(#[from] exactlp::LpError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
