//! Left-invariant metrics as Gram matrices in the basis `X1, X2, X3`.

use nalgebra::{Cholesky, Matrix3};
use serde::{Deserialize, Serialize};

use crate::automorphism::NilAutomorphism;
use crate::error::{NilError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::serde_repr::GramRepr", into = "crate::serde_repr::GramRepr")]
pub struct LeftInvariantMetric {
    gram: Matrix3<f64>,
}

/// Returns an error unless `m` is finite, symmetric (to relative 1e-10) and positive definite.
pub fn check_spd(m: &Matrix3<f64>) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(NilError::NonFinite("Gram matrix"));
    }
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-10 * scale {
        return Err(NilError::NotPositiveDefinite);
    }
    let sym = (m + m.transpose()) * 0.5;
    if Cholesky::new(sym).is_none() {
        return Err(NilError::NotPositiveDefinite);
    }
    Ok(())
}

/// Matrix `J` of the left-invariant coframe `(dx1, dx2, dx3 - x1 dx2)` in coordinates.
///
/// For a coordinate vector `v` at a point with first coordinate `x1`, `J v` are its
/// coefficients in the frame `X1, X2, X3`.
pub fn coframe(x1: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -x1, 1.0)
}

pub fn coframe_inverse(x1: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, x1, 1.0)
}

impl LeftInvariantMetric {
    pub fn new(gram: Matrix3<f64>) -> Result<Self> {
        check_spd(&gram)?;
        Ok(Self { gram: (gram + gram.transpose()) * 0.5 })
    }

    /// `g_Nil`, for which `X1, X2, X3` is orthonormal.
    pub fn standard() -> Self {
        Self { gram: Matrix3::identity() }
    }

    pub fn diagonal(a: f64, b: f64, c: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&nalgebra::Vector3::new(a, b, c)))
    }

    pub fn gram(&self) -> &Matrix3<f64> {
        &self.gram
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.gram * c)
    }

    pub fn determinant(&self) -> f64 {
        self.gram.determinant()
    }

    /// Riemannian volume density relative to `dx1 dx2 dx3`.
    pub fn volume_density(&self) -> f64 {
        self.determinant().sqrt()
    }

    pub fn inverse(&self) -> Matrix3<f64> {
        self.gram.try_inverse().expect("SPD matrices are invertible")
    }

    /// `D^T G D`.
    pub fn pull_back(&self, d: &NilAutomorphism) -> Self {
        let m = d.matrix();
        Self { gram: sym(&(m.transpose() * self.gram * m)) }
    }

    /// `(D^-1)^T G D^-1`.
    pub fn push_forward(&self, d: &NilAutomorphism) -> Self {
        self.pull_back(&d.inverse())
    }

    /// The metric written in the coordinate frame `∂1, ∂2, ∂3` at a point with first coordinate `x1`.
    pub fn coordinate_matrix(&self, x1: f64) -> Matrix3<f64> {
        let j = coframe(x1);
        sym(&(j.transpose() * self.gram * j))
    }

    /// Inverse of [`Self::coordinate_matrix`]: the `X`-frame Gram matrix of a coordinate-frame tensor.
    pub fn from_coordinate_matrix(coord: &Matrix3<f64>, x1: f64) -> Result<Self> {
        let ji = coframe_inverse(x1);
        Self::new(ji.transpose() * coord * ji)
    }

    pub fn inner(&self, v: &nalgebra::Vector3<f64>, w: &nalgebra::Vector3<f64>) -> f64 {
        v.dot(&(self.gram * w))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.gram - other.gram).amax()
    }
}

pub(crate) fn sym(m: &Matrix3<f64>) -> Matrix3<f64> {
    (m + m.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_spd() {
        assert!(LeftInvariantMetric::new(Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, -1.0, 1.0))).is_err());
        assert!(LeftInvariantMetric::new(Matrix3::new(1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0)).is_err());
        assert!(LeftInvariantMetric::new(Matrix3::from_element(f64::NAN)).is_err());
    }

    #[test]
    fn coordinate_matrix_is_unimodular_transform() {
        let g = LeftInvariantMetric::new(Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.7)).unwrap();
        for x1 in [-2.0, 0.0, 0.3, 5.0] {
            let c = g.coordinate_matrix(x1);
            assert!((c.determinant() - g.determinant()).abs() < 1e-12 * g.determinant().max(1.0));
            let back = LeftInvariantMetric::from_coordinate_matrix(&c, x1).unwrap();
            assert!(back.max_abs_diff(&g) < 1e-12);
        }
        assert_eq!(LeftInvariantMetric::standard().coordinate_matrix(0.0), Matrix3::identity());
    }
}
