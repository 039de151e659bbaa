use thiserror::Error;

/// Errors produced by the synchronization library.
#[derive(Debug, Error)]
pub enum SyncError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:e})")]
    NotHermitian { asymmetry: f64 },

    #[error("eigensolver did not converge within {iterations} matrix products (best residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("node {node} has zero degree; degree normalization is undefined")]
    IsolatedNode { node: usize },

    #[error("translation system is rank deficient: {0}")]
    RankDeficient(String),

    #[error("graph file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SyncError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(SyncError::InvalidInput(msg.into()))
}
