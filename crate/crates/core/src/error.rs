use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid tree code {code:?}: {reason}")]
    InvalidTree { code: String, reason: String },

    #[error("type index {index} out of range for {n} types")]
    TypeOutOfRange { index: usize, n: usize },

    #[error("empty type set")]
    EmptyTypeSet,

    #[error("kernel has zero L1 norm")]
    ZeroKernel,

    #[error("kernel is degenerate: type {0} has degree 0")]
    Degenerate(usize),

    #[error("tree of height {height} does not fit in depth {depth}")]
    TreeTooTall { height: usize, depth: usize },

    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),

    #[error("depth mismatch: {0} vs {1}")]
    DepthMismatch(usize, usize),

    #[error("graph is disconnected")]
    Disconnected,

    #[error("{resampled} of {draws} graph draws were disconnected")]
    PersistentDisconnection { resampled: usize, draws: usize },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("internal inconsistency: {0}")]
    Internal(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
