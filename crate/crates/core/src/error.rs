use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid offspring law: {0}")]
    InvalidLaw(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// The operation is defined only for a different criticality regime.
    #[error("regime mismatch: {0}")]
    Regime(String),

    #[error("truncation order {requested} exceeds limit {limit}")]
    OrderOverflow { requested: usize, limit: usize },

    #[error("coefficient {index} lies beyond truncation order {order}; increase the order")]
    BeyondTruncation { index: usize, order: usize },

    #[error("iteration did not converge: {0}")]
    NoConvergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
