use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NilError {
    #[error("matrix is not an automorphism of the Heisenberg algebra (bracket defect {defect:.3e})")]
    NotAutomorphism { defect: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("Gram matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, NilError>;
