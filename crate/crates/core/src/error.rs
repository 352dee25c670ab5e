use thiserror::Error;

/// Errors raised by tensor construction, instance validation and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum TcpError {
    #[error("duplicate entry at index {0:?}")]
    DuplicateEntry(Vec<usize>),
    #[error("bad index {index:?} for order {order}, dim {dim}")]
    BadIndex {
        index: Vec<usize>,
        order: usize,
        dim: usize,
    },
    #[error("bad value: {0}")]
    BadValue(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("bad index set {0:?}")]
    BadIndexSet(Vec<usize>),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("dimension {dim} exceeds the enumeration limit {max}")]
    TooLarge { dim: usize, max: usize },
    #[error("eigenvector must be nonzero")]
    BadEigenvector,
    #[error("no convergence: best residual {residual:e} at {best:?}")]
    NoConvergence { best: Vec<f64>, residual: f64 },
}

pub type Result<T, E = TcpError> = std::result::Result<T, E>;
