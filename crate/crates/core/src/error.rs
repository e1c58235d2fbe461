use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (Cholesky pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("matrix is not Hermitian (max deviation {deviation:e}, allowed {allowed:e})")]
    NotHermitian { deviation: f64, allowed: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("matrix is singular to working precision (estimated condition number {condition:e})")]
    Singular { condition: f64 },

    #[error("matrix exponential out of range (norm {norm:e})")]
    Range { norm: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid coefficient at x = {x}: {reason}")]
    Coefficient { x: f64, reason: String },

    #[error("eigensolver failed: {0}")]
    Eigen(String),

    #[error("resolvent singular at lambda = {lambda}")]
    Resolvent { lambda: f64 },

    #[error("time step dt = {dt} failed: {source}")]
    Step {
        dt: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("nonlinearity returned non-finite values at step {step}")]
    Nonlinearity { step: usize },

    #[error("state norm exceeded {limit:e} at step {step}; last finite time {last_time}")]
    BlowUp { step: usize, last_time: f64, limit: f64 },

    #[error("self-check failed: {0}")]
    Consistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
