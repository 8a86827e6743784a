use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension {dim} is not a power of two")]
    BadDimension { dim: usize },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has {found} entries, expected {expected}")]
    EntryCount { expected: usize, found: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace} is not 1")]
    WrongTrace { trace: f64 },

    #[error("eigenvalues sum to {sum} after clipping")]
    Malformed { sum: f64 },

    #[error("negative probability {value:e} at index {index}")]
    NegativeProbability { index: usize, value: f64 },

    #[error("{qubits} qubits exceed the {repr} limit of {cap}")]
    CapExceeded {
        qubits: usize,
        cap: usize,
        repr: &'static str,
    },

    #[error("qubit count mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("spectrum carries no eigenvectors")]
    NoEigenvectors,

    #[error("index {value} out of range [{min}, {max}]")]
    OutOfRange { value: usize, min: usize, max: usize },

    #[error("depth {requested} exceeds the available depth {available}")]
    DepthExceeded { requested: usize, available: usize },

    #[error("bit source exhausted: {requested} bits requested, {available} available")]
    SourceExhausted { requested: usize, available: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
