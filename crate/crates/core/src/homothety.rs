//! Writing a left-invariant metric as `λ² φ* g_Nil`.

use nalgebra::{Cholesky, Matrix2, Matrix3, Vector2};

use crate::automorphism::NilAutomorphism;
use crate::error::Result;
use crate::metric::{check_spd, LeftInvariantMetric};

/// `G = λ² Dᵀ D` with `D` an automorphism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homothety {
    pub lambda: f64,
    pub auto: NilAutomorphism,
}

impl Homothety {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        let d = self.auto.matrix();
        d.transpose() * d * (self.lambda * self.lambda)
    }

    /// Frobenius norm of `G - λ² Dᵀ D`.
    pub fn residual(&self, g: &LeftInvariantMetric) -> f64 {
        (self.reconstruct() - g.gram()).norm()
    }
}

/// Finds `λ > 0` and an automorphism `φ` with `G = λ² φ* g_Nil`.
///
/// The center direction `X3` is fixed by every automorphism, so the frame is built
/// from the `G`-orthogonal complement of `X3`: the Schur complement `Q` of `G33` is
/// the induced form on the quotient plane, its Cholesky factor gives the planar part,
/// and the cross terms with `X3` are absorbed by the shear. `λ = √det G / G33`.
pub fn homothety_decompose(g: &LeftInvariantMetric) -> Result<Homothety> {
    let gram = g.gram();
    check_spd(gram)?;
    let g33 = gram[(2, 2)];
    let cross = Vector2::new(gram[(0, 2)], gram[(1, 2)]);
    let q = gram.fixed_view::<2, 2>(0, 0).into_owned() - cross * cross.transpose() / g33;
    // Q = M^T M with M upper triangular.
    let m = Cholesky::new(q).expect("Schur complement of SPD is SPD").l().transpose();
    let m_inv = m.try_inverse().expect("invertible");
    let det_m = m.determinant();
    let lambda = det_m / g33.sqrt();

    // Frame E_a = (w_a, -(cross · w_a)/G33) with w_a the columns of M^-1, then scaled by λ.
    let mut frame = Matrix3::zeros();
    for a in 0..2 {
        let w = m_inv.column(a);
        frame[(0, a)] = lambda * w[0];
        frame[(1, a)] = lambda * w[1];
        frame[(2, a)] = -lambda * cross.dot(&w) / g33;
    }
    // E3 = [E1, E2] = det(planar part) X3.
    let planar: Matrix2<f64> = frame.fixed_view::<2, 2>(0, 0).into_owned();
    frame[(2, 2)] = planar.determinant();
    let d = frame.try_inverse().expect("frame is a basis");
    let auto = NilAutomorphism::from_matrix_with_tol(d, 1e-9)?;
    Ok(Homothety { lambda, auto })
}
