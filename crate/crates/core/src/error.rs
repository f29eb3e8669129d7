use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid volatility band [{low}, {high}]: require 0 < sigma_low <= sigma_high")]
    InvalidBand { low: f64, high: f64 },

    #[error("scenario level {level} lies outside the band [{low}, {high}]")]
    LevelOutsideBand { level: f64, low: f64, high: f64 },

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite coefficient {field} at (t={t}, T={maturity})")]
    NonFiniteCoefficient { field: &'static str, t: f64, maturity: f64 },

    #[error("invalid initial curve: {0}")]
    InvalidCurve(String),

    #[error("coefficient dimension {found} not supported here (expected {expected})")]
    Dimension { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite payoff in scenario '{scenario}' on path {path}")]
    NonFinitePayoff { scenario: String, path: usize },

    #[error("coefficients are not risk-neutral: {0}")]
    NotRiskNeutral(String),
}

pub type Result<T> = std::result::Result<T, Error>;
