use thiserror::Error;

/// Errors raised by the screening library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is rank deficient: numerical rank {rank} < {expected}")]
    RankDeficient { rank: usize, expected: usize },

    #[error("gram matrix is numerically singular")]
    SingularGram,

    #[error("projection screening needs p > n (got n = {n}, p = {p})")]
    NotUnderdetermined { n: usize, p: usize },

    #[error("column {0} is constant")]
    ConstantColumn(usize),

    #[error("response is constant")]
    ConstantResponse,

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("signal variance beta' Sigma beta is zero")]
    DegenerateSignal,

    #[error("invalid selection rule: {0}")]
    InvalidRule(String),

    #[error("invalid model size: {0}")]
    InvalidSize(String),

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("invalid configuration: {0}")]
    InvalidSpec(String),

    #[error("active index {0} is absent from the ordering")]
    NotCoverable(usize),

    #[error("training split contains a single class")]
    SingleClassTraining,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
