//! Ricci flow through left-invariant metrics on Nil.

pub mod catalog;
pub mod claim;
pub mod closed_form;
pub mod error;
pub mod integrate;
pub mod ratio;
pub mod rhs;
pub mod stability;

pub use catalog::catalog_initial_metrics;
pub use claim::{claim_constants, ClaimConstants};
pub use closed_form::{closed_form_diagonal, twist_ratio};
pub use error::{FlowError, Result};
pub use integrate::{integrate, integrate_with, FlowState, FlowTrajectory, Strategy, DEFAULT_TOL};
pub use ratio::{almost_flat_ratio, almost_flat_ratio_with};
pub use rhs::{flow_rhs, flow_rhs_with};
pub use stability::{batch_stability, stability_run, StabilityConfig, StabilitySchedule, StabilityStep};
