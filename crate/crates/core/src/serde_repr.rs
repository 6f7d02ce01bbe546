//! Row-major JSON representations for matrix-valued types.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::automorphism::NilAutomorphism;
use crate::error::NilError;
use crate::metric::LeftInvariantMetric;

pub fn to_row_major(m: &Matrix3<f64>) -> [f64; 9] {
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = m[(r, c)];
        }
    }
    out
}

pub fn from_row_major(v: &[f64; 9]) -> Matrix3<f64> {
    Matrix3::from_row_slice(v)
}

#[derive(Serialize, Deserialize)]
pub struct Mat3Repr {
    pub matrix: [f64; 9],
}

impl From<NilAutomorphism> for Mat3Repr {
    fn from(d: NilAutomorphism) -> Self {
        Mat3Repr { matrix: to_row_major(d.matrix()) }
    }
}

impl TryFrom<Mat3Repr> for NilAutomorphism {
    type Error = NilError;
    fn try_from(r: Mat3Repr) -> Result<Self, NilError> {
        NilAutomorphism::from_matrix_with_tol(from_row_major(&r.matrix), 1e-9)
    }
}

#[derive(Serialize, Deserialize)]
pub struct GramRepr {
    pub gram: [f64; 9],
}

impl From<LeftInvariantMetric> for GramRepr {
    fn from(g: LeftInvariantMetric) -> Self {
        GramRepr { gram: to_row_major(g.gram()) }
    }
}

impl TryFrom<GramRepr> for LeftInvariantMetric {
    type Error = NilError;
    fn try_from(r: GramRepr) -> Result<Self, NilError> {
        LeftInvariantMetric::new(from_row_major(&r.gram))
    }
}

impl std::fmt::Display for Mat3Repr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.matrix)
    }
}
