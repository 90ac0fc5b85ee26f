use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("jet error: {0}")]
    JetOrder(String),
    #[error("singular value: {0}")]
    Singular(String),
    #[error("metric not positive definite at {point:?}")]
    NotPositiveDefinite { point: Vec<f64> },
    #[error("point {point:?} outside the domain of `{manifold}`")]
    OutsideDomain { manifold: String, point: Vec<f64> },
    #[error("degenerate frame: {0}")]
    DegenerateFrame(String),
    #[error("unknown manifold `{0}`")]
    UnknownManifold(String),
    #[error("unknown theorem `{0}`")]
    UnknownTheorem(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("hypothesis not met: {0}")]
    Hypothesis(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("mixed base points in bivector operation")]
    MixedPoints,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
