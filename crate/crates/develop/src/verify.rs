//! Recognition of locally Nil patches from their discrete curvature.

use nil_rounding::{nil_pattern_defect, point_curvature};
use serde::Serialize;

use crate::patch::MetricPatch;

/// Default bound on the relative pattern defect and on the relative spread of the scale.
pub const LOCAL_NIL_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, Serialize)]
pub struct LocalNilReport {
    pub is_local_nil: bool,
    /// Mean of the per-vertex scales `λ` with curvature of `λ² g_Nil`.
    pub lambda: f64,
    pub max_pattern_defect: f64,
    /// `(max λ − min λ) / mean λ` over the interior.
    pub lambda_spread: f64,
    pub vertices_checked: usize,
}

/// Scale `λ` of a metric whose curvature operator has eigenvalues `(−3c, c, c)`: `c = 1/(4λ²)`.
pub fn scale_of(ev: [f64; 3]) -> f64 {
    let c = (ev[1] + ev[2] - ev[0] / 3.0) / 3.0;
    if c > 0.0 {
        0.5 / c.sqrt()
    } else {
        f64::NAN
    }
}

pub fn verify_local_nil(patch: &MetricPatch) -> (bool, f64) {
    let r = verify_local_nil_with(patch, LOCAL_NIL_TOLERANCE);
    (r.is_local_nil, r.lambda)
}

pub fn verify_local_nil_with(patch: &MetricPatch, tol: f64) -> LocalNilReport {
    let mut defect = 0.0f64;
    let mut lambdas = Vec::new();
    for v in (0..patch.num_vertices()).filter(|&v| patch.is_interior(v)) {
        match point_curvature(&patch.jet(v)) {
            Some(c) => {
                let d = nil_pattern_defect(c.operator_eigenvalues);
                defect = defect.max(if d.is_nan() { f64::INFINITY } else { d });
                lambdas.push(scale_of(c.operator_eigenvalues));
            }
            None => defect = f64::INFINITY,
        }
    }
    let vertices_checked = lambdas.len();
    let lambda = lambdas.iter().sum::<f64>() / vertices_checked as f64;
    let (lo, hi) = lambdas.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let lambda_spread = (hi - lo) / lambda;
    let is_local_nil = defect <= tol && lambda_spread <= tol && lambda.is_finite();
    LocalNilReport { is_local_nil, lambda, max_pattern_defect: defect, lambda_spread, vertices_checked }
}
