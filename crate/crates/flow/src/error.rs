use nil_core::NilError;
use nil_lattice::LatticeError;
use thiserror::Error;

use crate::stability::StabilitySchedule;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("metric left the positive cone at t = {t}")]
    NotPositiveDefinite { t: f64 },
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("assertion ({assertion}) violated at step {step}: {detail}")]
    Assertion { step: usize, assertion: u8, detail: String, schedule: Box<StabilitySchedule> },
    #[error(transparent)]
    Core(#[from] NilError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

pub type Result<T> = std::result::Result<T, FlowError>;
