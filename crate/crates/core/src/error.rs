use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Edge-list text could not be parsed. `line` is 1-based.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("vertex {vertex} out of range for a graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("measurement rate must be finite and positive, got {0}")]
    InvalidRate(f64),

    #[error("invalid initial state: {0}")]
    InvalidState(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector of length {0} does not vectorize a square matrix")]
    NotPerfectSquare(usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    /// A numerical post-condition failed (criteria disagreement, undefined fit,
    /// non-real hitting time, ...).
    #[error("numerical contract violated: {0}")]
    Contract(String),
}

impl Error {
    /// True for failures of numerical post-conditions rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Contract(_) | Error::NotHermitian { .. })
    }
}
