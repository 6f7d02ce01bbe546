//! Automorphisms of the Heisenberg Lie algebra.
//!
//! Every automorphism factors uniquely as `shear(b) * block(A)` where
//! `block(A) = diag(A, det A)` and `shear(b)` is unipotent with bottom row
//! `(b1, b2, 1)`. In matrix form this is
//!
//! ```text
//! | A      0     |
//! | b^T A  det A |
//! ```

use nalgebra::{Matrix2, Matrix3, RowVector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{NilError, Result};
use crate::group::{LieVec, NilPoint};

/// Default tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "crate::serde_repr::Mat3Repr", into = "crate::serde_repr::Mat3Repr")]
pub struct NilAutomorphism {
    matrix: Matrix3<f64>,
}

/// The factorization `(A, b1, b2)` of an automorphism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutomorphismFactors {
    pub a: Matrix2<f64>,
    pub b1: f64,
    pub b2: f64,
}

impl AutomorphismFactors {
    pub fn compose(&self) -> Matrix3<f64> {
        shear_matrix(self.b1, self.b2) * block_matrix(&self.a)
    }
}

fn block_matrix(a: &Matrix2<f64>) -> Matrix3<f64> {
    Matrix3::new(a[(0, 0)], a[(0, 1)], 0.0, a[(1, 0)], a[(1, 1)], 0.0, 0.0, 0.0, a.determinant())
}

fn shear_matrix(b1: f64, b2: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, b1, b2, 1.0)
}

/// Largest violation of `D[v,w] = [Dv,Dw]` over basis pairs, relative to `max(1, |D|^2)`.
pub fn bracket_defect(d: &Matrix3<f64>) -> f64 {
    let basis = [LieVec::X1, LieVec::X2, LieVec::X3];
    let scale = d.norm_squared().max(1.0);
    let mut worst = 0.0_f64;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let lhs = d * basis[i].bracket(&basis[j]).to_vector();
            let dv = LieVec::from_vector(&(d * basis[i].to_vector()));
            let dw = LieVec::from_vector(&(d * basis[j].to_vector()));
            let rhs = dv.bracket(&dw).to_vector();
            worst = worst.max((lhs - rhs).amax());
        }
    }
    worst / scale
}

/// Splits a bracket-preserving matrix into its block and shear factors.
pub fn factor_automorphism(d: &Matrix3<f64>) -> Result<AutomorphismFactors> {
    factor_automorphism_with_tol(d, ALGEBRA_TOL)
}

pub fn factor_automorphism_with_tol(d: &Matrix3<f64>, tol: f64) -> Result<AutomorphismFactors> {
    if d.iter().any(|x| !x.is_finite()) {
        return Err(NilError::NonFinite("automorphism matrix"));
    }
    let defect = bracket_defect(d);
    if defect > tol {
        return Err(NilError::NotAutomorphism { defect });
    }
    let a = d.fixed_view::<2, 2>(0, 0).into_owned();
    let det = a.determinant();
    if det.abs() < f64::EPSILON {
        return Err(NilError::Singular);
    }
    let a_inv = a.try_inverse().ok_or(NilError::Singular)?;
    let bottom = RowVector2::new(d[(2, 0)], d[(2, 1)]);
    let b = bottom * a_inv;
    Ok(AutomorphismFactors { a, b1: b[0], b2: b[1] })
}

impl NilAutomorphism {
    pub const IDENTITY: NilAutomorphism = NilAutomorphism { matrix: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0) };

    pub fn from_matrix(matrix: Matrix3<f64>) -> Result<Self> {
        Self::from_matrix_with_tol(matrix, ALGEBRA_TOL)
    }

    pub fn from_matrix_with_tol(matrix: Matrix3<f64>, tol: f64) -> Result<Self> {
        factor_automorphism_with_tol(&matrix, tol)?;
        Ok(Self { matrix })
    }

    pub fn block(a: Matrix2<f64>) -> Result<Self> {
        if a.determinant().abs() < f64::EPSILON {
            return Err(NilError::Singular);
        }
        Ok(Self { matrix: block_matrix(&a) })
    }

    pub fn shear(b1: f64, b2: f64) -> Self {
        Self { matrix: shear_matrix(b1, b2) }
    }

    pub fn from_factors(f: &AutomorphismFactors) -> Result<Self> {
        if f.a.determinant().abs() < f64::EPSILON {
            return Err(NilError::Singular);
        }
        Ok(Self { matrix: f.compose() })
    }

    /// Carnot dilation: `X1, X2` scaled by `lambda`, `X3` by `lambda^2`.
    pub fn carnot(lambda: f64) -> Self {
        Self { matrix: Matrix3::new(lambda, 0.0, 0.0, 0.0, lambda, 0.0, 0.0, 0.0, lambda * lambda) }
    }

    /// Rotation of the `X1, X2` plane by `angle`, fixing `X3`.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self { matrix: block_matrix(&Matrix2::new(c, -s, s, c)) }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn factors(&self) -> AutomorphismFactors {
        let a = self.matrix.fixed_view::<2, 2>(0, 0).into_owned();
        let a_inv = a.try_inverse().expect("automorphism block is invertible");
        let b = RowVector2::new(self.matrix[(2, 0)], self.matrix[(2, 1)]) * a_inv;
        AutomorphismFactors { a, b1: b[0], b2: b[1] }
    }

    /// The planar linear part `A`.
    pub fn planar(&self) -> Matrix2<f64> {
        self.matrix.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// True when the shear vanishes and `A` is orthogonal, i.e. the automorphism is an isometry of `g_Nil`.
    pub fn is_isometric(&self, tol: f64) -> bool {
        let f = self.factors();
        let ata = f.a.transpose() * f.a;
        (ata - Matrix2::identity()).amax() <= tol && f.b1.abs() <= tol && f.b2.abs() <= tol
    }

    pub fn compose(&self, other: &NilAutomorphism) -> NilAutomorphism {
        NilAutomorphism { matrix: self.matrix * other.matrix }
    }

    pub fn inverse(&self) -> NilAutomorphism {
        NilAutomorphism { matrix: self.matrix.try_inverse().expect("automorphisms are invertible") }
    }

    pub fn determinant(&self) -> f64 {
        self.matrix.determinant()
    }

    pub fn apply_vec(&self, v: &LieVec) -> LieVec {
        LieVec::from_vector(&(self.matrix * v.to_vector()))
    }

    /// Group automorphism `exp(v) -> exp(Dv)`.
    pub fn apply_point(&self, p: &NilPoint) -> NilPoint {
        self.apply_vec(&p.log()).exp()
    }

    /// Coordinate Jacobian of [`Self::apply_point`] at `p`.
    pub fn point_jacobian(&self, p: &NilPoint) -> Matrix3<f64> {
        // d log at p, then D, then d exp at Dv.
        let dlog = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, -0.5 * p.x2, -0.5 * p.x1, 1.0);
        let w = self.matrix * p.log().to_vector();
        let dexp = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.5 * w[1], 0.5 * w[0], 1.0);
        dexp * self.matrix * dlog
    }

    pub fn apply_vector3(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.matrix * v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn identity_factors() {
        let f = factor_automorphism(&Matrix3::identity()).unwrap();
        assert_eq!(f.a, Matrix2::identity());
        assert_eq!((f.b1, f.b2), (0.0, 0.0));
    }

    #[test]
    fn carnot_dilation_factors() {
        let d = NilAutomorphism::carnot(3.0);
        assert_eq!(*d.matrix(), Matrix3::from_diagonal(&Vector3::new(3.0, 3.0, 9.0)));
        let f = d.factors();
        assert_eq!(f.a, Matrix2::identity() * 3.0);
        assert_eq!((f.b1, f.b2), (0.0, 0.0));
    }

    #[test]
    fn rotation_is_isometric() {
        let d = NilAutomorphism::rotation(0.7);
        let f = factor_automorphism(d.matrix()).unwrap();
        assert!((f.a[(0, 0)] - 0.7f64.cos()).abs() < 1e-15);
        assert!(f.b1.abs() < 1e-15 && f.b2.abs() < 1e-15);
        assert!(d.is_isometric(1e-12));
        assert!(!NilAutomorphism::carnot(2.0).is_isometric(1e-12));
        assert!(NilAutomorphism::rotation(PI / 2.0).is_isometric(1e-12));
    }

    #[test]
    fn rejects_non_automorphisms() {
        let m = Matrix3::new(1.0, 0.0, 0.3, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(matches!(factor_automorphism(&m), Err(NilError::NotAutomorphism { .. })));
        let m = Matrix3::from_diagonal(&Vector3::new(2.0, 1.0, 1.0));
        assert!(factor_automorphism(&m).is_err());
    }

    #[test]
    fn shear_block_roundtrip() {
        let a = Matrix2::new(1.5, -0.5, 0.25, 2.0);
        let d = NilAutomorphism::shear(0.3, -1.1).compose(&NilAutomorphism::block(a).unwrap());
        let f = factor_automorphism(d.matrix()).unwrap();
        assert!((f.compose() - d.matrix()).amax() < 1e-12);
        assert!((f.b1 - 0.3).abs() < 1e-12 && (f.b2 + 1.1).abs() < 1e-12);
    }

    #[test]
    fn point_jacobian_matches_finite_differences() {
        let d = NilAutomorphism::shear(0.2, 0.4).compose(&NilAutomorphism::block(Matrix2::new(1.1, 0.3, -0.2, 0.9)).unwrap());
        let p = NilPoint::new(0.4, -0.7, 1.3);
        let jac = d.point_jacobian(&p);
        let h = 1e-6;
        for k in 0..3 {
            let mut dp = p.to_vector();
            dp[k] += h;
            let mut dm = p.to_vector();
            dm[k] -= h;
            let fp = d.apply_point(&NilPoint::from_vector(&dp)).to_vector();
            let fm = d.apply_point(&NilPoint::from_vector(&dm)).to_vector();
            let col = (fp - fm) / (2.0 * h);
            assert!((col - jac.column(k)).amax() < 1e-8);
        }
    }
}
