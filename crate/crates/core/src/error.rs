use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical and exact engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("log-series cap exceeded: n = {n} > cap = {cap}")]
    CapExceeded { n: usize, cap: usize },

    #[error("zero binomial met a non-vanishing summand at (n = {n}, k = {k})")]
    ZeroDivision { n: usize, k: usize },

    #[error("series did not converge within {terms} terms")]
    SeriesNonConvergence { terms: usize },

    #[error("pole of the rising factorial of b = {b}")]
    Pole { b: Complex64 },

    #[error("adaptive quadrature did not reach tolerance (estimated error {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("subordination did not converge at z = {z} after {iterations} iterations")]
    Subordination { z: Complex64, iterations: usize },

    #[error("branch error: {0}")]
    Branch(String),

    #[error("two evaluation routes disagree: {0}")]
    Inconsistent(String),

    #[error("unsupported measure: {0}")]
    UnsupportedMeasure(String),

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("nonpositive eigenvalue {value:e} in a positive-definite spectrum")]
    Positivity { value: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::InvalidArgument(_) | Error::UnsupportedMeasure(_) | Error::Parse(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
