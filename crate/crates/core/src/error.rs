use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input slot {0} is unbound")]
    UnboundInput(usize),
    #[error("non-finite value produced by node {node} ({op})")]
    NonFinite { node: usize, op: String },
    #[error("parameter tensor `{0}` not found")]
    UnknownParameter(String),
    #[error("shape mismatch for `{name}`: expected {expected}, got {actual}")]
    ShapeMismatch {
        name: String,
        expected: usize,
        actual: usize,
    },
    #[error("dimension mismatch: expected {expected} inputs, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("empty input where at least {0} element(s) required")]
    Empty(usize),
    #[error("R^2 is undefined for a constant target")]
    ConstantTarget,
    #[error("loss became NaN at step {0}")]
    NanLoss(usize),
    #[error("nonpositive value for feature {feature} after shift ({value})")]
    NonPositiveInput { feature: usize, value: f64 },
    #[error("unknown dataset `{0}`; available: {1}")]
    UnknownDataset(String, String),
    #[error("unknown PDE `{0}`")]
    UnknownPde(String),
    #[error("unknown model kind `{0}`")]
    UnknownModelKind(String),
    #[error("model of order {order} cannot provide derivative order {needed}")]
    InsufficientSmoothness { order: usize, needed: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Msg(String),
}

impl Error {
    pub fn msg(s: impl Into<String>) -> Self {
        Error::Msg(s.into())
    }
}
