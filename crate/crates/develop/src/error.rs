use nil_core::NilError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DevelopError {
    #[error("invalid patch: {0}")]
    InvalidPatch(String),
    #[error("patch is not locally Nil (pattern defect {defect:e}, scale spread {spread:e})")]
    NotLocallyNil { defect: f64, spread: f64 },
    #[error("Ricci eigenvalues do not isolate a central direction (gap {0:e})")]
    Degenerate(f64),
    #[error("bracket normalization {0} is not the Nil value 1")]
    Bracket(f64),
    #[error("patch orientation disagrees with the orientation induced by the bracket")]
    OrientationMismatch,
    #[error("holonomy defect {defect:e} exceeds {tolerance:e}")]
    HolonomyDefect { defect: f64, tolerance: f64 },
    #[error(transparent)]
    Core(#[from] NilError),
}

pub type Result<T> = std::result::Result<T, DevelopError>;
