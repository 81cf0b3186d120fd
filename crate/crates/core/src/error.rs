use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum KemenyError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("row {row} sums to {sum}, outside the renormalization tolerance")]
    NotStochastic { row: usize, sum: f64 },

    #[error("negative entry {value} at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize, value: f64 },

    #[error("chain is reducible: {components} strongly connected components")]
    Reducible { components: usize },

    #[error("vertex {0} has no outgoing edges")]
    ZeroDegree(usize),

    #[error("matrix is singular (zero pivot at step {0})")]
    Singular(usize),

    #[error("factorization breakdown at row {row}: pivot {pivot}")]
    Breakdown { row: usize, pivot: f64 },

    #[error("{method} did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("divide-and-conquer failed at {path}: {source}")]
    Recursion {
        path: String,
        #[source]
        source: Box<KemenyError>,
    },

    #[error("matrix market parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported matrix market format: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, KemenyError>;
