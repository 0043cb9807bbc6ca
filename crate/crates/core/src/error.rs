use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field has {got} values, grid expects {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value at cell {0}")]
    NonFinite(usize),

    #[error("argument {value} outside domain: {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("coefficient must be positive, found {value} at cell {cell}")]
    NonPositiveCoefficient { cell: usize, value: f64 },

    #[error("invalid exponent p = {0}")]
    InvalidExponent(f64),

    /// A modelling hypothesis on the coefficients or data does not hold.
    #[error("hypothesis ({name}) violated: {detail}")]
    Hypothesis { name: &'static str, detail: String },

    #[error(
        "linear solve did not converge: {iterations} iterations, relative residual {residual:e}"
    )]
    LinearSolve { iterations: usize, residual: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    FixedPoint { iterations: usize, increment: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
