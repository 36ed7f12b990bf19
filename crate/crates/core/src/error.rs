use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{which} configuration is in collision")]
    InCollision { which: &'static str },

    #[error("operation requires an n-link snake world")]
    WrongKinematics,

    #[error("halton dimension {dim} exceeds the {max} stocked prime bases")]
    HaltonDimension { dim: usize, max: usize },

    #[error("edge ({0}, {1}) is not in the graph")]
    MissingEdge(usize, usize),

    #[error("no feasible path between start and goal")]
    Infeasible,

    #[error("paths {0:?} cannot be covered by any candidate edge")]
    Uncoverable(Vec<usize>),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("malformed model file: {0}")]
    Model(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
