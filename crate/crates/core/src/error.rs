use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch(Vec<u64>, Vec<u64>),
    #[error("p-adic valuation undefined for order {order} at p = {p}")]
    ValuationUndefined { order: u64, p: u64 },
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("rational reconstruction failed for {what}; try a higher precision")]
    ReconstructionFailed { what: String },
    #[error("catalog line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("curve {label}: {msg}")]
    Validation { label: String, msg: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("cap exceeded: {0}")]
    CapExceeded(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
