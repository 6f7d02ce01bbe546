use nil_core::NilError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("generator {index} is not an isometry of g_Nil")]
    NotIsometry { index: usize },
    #[error("lattice has no generators")]
    Empty,
    #[error("element {word} has a fixed point")]
    NotFree { word: String },
    #[error("element {word} lies within {distance:e} of the identity")]
    NotDiscrete { word: String, distance: f64 },
    #[error("point group does not close within the word ball: {word}")]
    PointGroupNotClosed { word: String },
    #[error("no translation basis found in the word ball")]
    NoTranslationBasis,
    #[error("unsupported point group: {0}")]
    UnsupportedPointGroup(String),
    #[error("metric is not invariant under element {word}")]
    MetricNotInvariant { word: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Core(#[from] NilError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LatticeError>;
