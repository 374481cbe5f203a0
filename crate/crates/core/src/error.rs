use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid multi-index: {0}")]
    InvalidIndex(String),
    #[error("index set is not lower (downward closed)")]
    NotLower,
    #[error("index set too large: {0}")]
    SetTooLarge(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("point coordinate {0} lies outside [-1, 1]")]
    OutOfDomain(f64),
    #[error("sample weight at position {index} is not positive ({value})")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
    #[error("degenerate grid/index set pairing: sigma_min = {sigma_min:e}, sigma_max = {sigma_max:e}")]
    DegenerateGrid { sigma_min: f64, sigma_max: f64 },
    #[error("invalid probability vector: {0}")]
    InvalidProbability(String),
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("unknown function id `{0}`")]
    UnknownFunction(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("search exhausted after {found} of {wanted} terms; truncation too small")]
    QueueExhausted { found: usize, wanted: usize },
    #[error("malformed input: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by the request rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::InvalidConfig(_) | Error::UnknownFunction(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
