use nalgebra::Matrix3;
use nil_core::{curvature_with, LeftInvariantMetric, StructureConstants};

use crate::error::Result;

/// `dG/dt = -2 Ric(G)` in the basis `X1, X2, X3`.
pub fn flow_rhs(g: &LeftInvariantMetric) -> Matrix3<f64> {
    -2.0 * nil_core::ricci(g)
}

/// The same vector field for an arbitrary three-dimensional Lie algebra.
pub fn flow_rhs_with(alg: &StructureConstants, gram: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    Ok(-2.0 * curvature_with(alg, gram)?.ricci)
}
