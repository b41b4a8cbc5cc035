use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unsupported dimension {n} (supported range is {min}..={max})")]
    UnsupportedDimension { n: usize, min: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite integrand value {value} at node {node}")]
    NumericInput { node: usize, value: f64 },

    #[error("grid exactness degree {exactness} is insufficient for harmonic degree {degree}")]
    ResolutionInsufficient { degree: usize, exactness: usize },

    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("support function is singular at {point:?}")]
    SingularPoint { point: Vec<f64> },

    #[error("arity mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("body '{body}' is not certified convex (margin {margin:e})")]
    Certification { body: String, margin: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("precondition violated: {message} (residual {residual:e})")]
    PreconditionViolation { message: String, residual: f64 },

    #[error("form {index} is not positive (smallest eigenvalue {min_eigenvalue:e})")]
    NonPositiveForm { index: usize, min_eigenvalue: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
