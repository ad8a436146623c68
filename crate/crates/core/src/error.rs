use alloc::string::String;
use core::fmt;

/// Errors produced by grid construction, solvers, and form evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Invalid argument (bounds, mode index, anisotropy out of range, ...).
    Parameter(String),
    /// Array length does not match the grid it is paired with.
    Shape { expected: usize, got: usize },
    /// Iterative solver failed to reach its tolerance.
    Convergence { iterations: usize, residual: f64 },
    /// A factorization hit a zero pivot and all retries were exhausted.
    Factorization { pivot_index: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Shape { expected, got } => {
                write!(f, "shape mismatch: expected {expected} values, got {got}")
            }
            Error::Convergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (last residual {residual:e})"
            ),
            Error::Factorization { pivot_index } => {
                write!(f, "factorization breakdown at pivot {pivot_index}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
