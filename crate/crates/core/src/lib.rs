//! Exact arithmetic and left-invariant geometry of the Heisenberg group `Nil`.

pub mod affine;
pub mod automorphism;
pub mod curvature;
pub mod error;
pub mod group;
pub mod homothety;
pub mod metric;
pub mod serde_repr;

pub use affine::{abelianize, NilAffineMap, PlanarAffine};
pub use automorphism::{bracket_defect, factor_automorphism, AutomorphismFactors, NilAutomorphism, ALGEBRA_TOL};
pub use curvature::{curvature, curvature_with, ricci, sup_rm, Curvature, StructureConstants};
pub use error::{NilError, Result};
pub use group::{bracket, LieVec, NilPoint};
pub use homothety::{homothety_decompose, Homothety};
pub use metric::{check_spd, coframe, coframe_inverse, LeftInvariantMetric};

/// Default tolerance for decomposition residuals.
pub const DECOMPOSITION_TOL: f64 = 1e-10;
