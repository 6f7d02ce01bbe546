//! Curvature of left-invariant metrics via the Koszul formula on an orthonormal left-invariant frame.
//!
//! For an orthonormal left-invariant frame with `[E_a, E_b] = C_ab^c E_c`,
//!
//! ```text
//! Γ_ab^c = ½ (C_ab^c − C_bc^a + C_ca^b)            (∇_{E_a} E_b = Γ_ab^c E_c)
//! R(E_a,E_b)E_c = ∇_a ∇_b E_c − ∇_b ∇_a E_c − ∇_{[E_a,E_b]} E_c
//! ```
//!
//! `|Rm|` is the operator norm of the curvature operator on bivectors, whose
//! diagonal entries in the frame bivectors are the sectional curvatures.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::Result;
use crate::metric::{check_spd, LeftInvariantMetric};

/// Structure constants `[X_i, X_j] = Σ_k c[i][j][k] X_k` of a 3-dimensional Lie algebra.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureConstants {
    pub c: [[[f64; 3]; 3]; 3],
}

impl StructureConstants {
    /// The Heisenberg algebra: `[X1, X2] = X3`.
    pub fn nil() -> Self {
        let mut c = [[[0.0; 3]; 3]; 3];
        c[0][1][2] = 1.0;
        c[1][0][2] = -1.0;
        Self { c }
    }

    /// The abelian algebra of `R^3`, used as the flat comparison case.
    pub fn abelian() -> Self {
        Self { c: [[[0.0; 3]; 3]; 3] }
    }
}

/// Full curvature data of a left-invariant metric.
#[derive(Debug, Clone)]
pub struct Curvature {
    /// Orthonormal frame; column `a` holds the `X`-coefficients of `E_a`.
    pub frame: Matrix3<f64>,
    /// `rm[a][b][c][d] = <R(E_a, E_b) E_c, E_d>`.
    pub rm: [[[[f64; 3]; 3]; 3]; 3],
    /// Curvature operator on the bivector basis `E2∧E3, E3∧E1, E1∧E2`.
    pub operator: Matrix3<f64>,
    /// Sectional curvatures `K(E1,E2), K(E1,E3), K(E2,E3)`.
    pub sectional: [f64; 3],
    /// Ricci tensor in the orthonormal frame.
    pub ricci_frame: Matrix3<f64>,
    /// Ricci tensor in the `X` basis.
    pub ricci: Matrix3<f64>,
    /// Operator norm of the curvature operator.
    pub sup_norm: f64,
}

const BIVECTORS: [(usize, usize); 3] = [(1, 2), (2, 0), (0, 1)];

/// Orthonormal frame `F` with `F^T G F = I`, lower-triangular Cholesky based.
pub fn orthonormal_frame(gram: &Matrix3<f64>) -> Matrix3<f64> {
    let l = nalgebra::Cholesky::new(*gram).expect("SPD").l();
    l.transpose().try_inverse().expect("invertible")
}

pub fn curvature(g: &LeftInvariantMetric) -> Curvature {
    curvature_with(&StructureConstants::nil(), g.gram()).expect("validated metric")
}

pub fn ricci(g: &LeftInvariantMetric) -> Matrix3<f64> {
    curvature(g).ricci
}

pub fn sup_rm(g: &LeftInvariantMetric) -> f64 {
    curvature(g).sup_norm
}

/// Curvature of the left-invariant metric with Gram matrix `gram` on the algebra `alg`.
pub fn curvature_with(alg: &StructureConstants, gram: &Matrix3<f64>) -> Result<Curvature> {
    check_spd(gram)?;
    let f = orthonormal_frame(gram);
    let f_inv = f.try_inverse().expect("invertible");

    // Structure constants in the orthonormal frame.
    let mut cf = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let w = f[(i, a)] * f[(j, b)];
                    if w == 0.0 {
                        continue;
                    }
                    for k in 0..3 {
                        let cijk = alg.c[i][j][k];
                        if cijk == 0.0 {
                            continue;
                        }
                        for (c, slot) in cf[a][b].iter_mut().enumerate() {
                            *slot += w * cijk * f_inv[(c, k)];
                        }
                    }
                }
            }
        }
    }

    let mut gamma = [[[0.0; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                gamma[a][b][c] = 0.5 * (cf[a][b][c] - cf[b][c][a] + cf[c][a][b]);
            }
        }
    }

    let mut rm = [[[[0.0; 3]; 3]; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                for e in 0..3 {
                    let mut v = 0.0;
                    for d in 0..3 {
                        v += gamma[b][c][d] * gamma[a][d][e] - gamma[a][c][d] * gamma[b][d][e] - cf[a][b][d] * gamma[d][c][e];
                    }
                    rm[a][b][c][e] = v;
                }
            }
        }
    }

    let mut operator = Matrix3::zeros();
    for (p, &(a, b)) in BIVECTORS.iter().enumerate() {
        for (q, &(c, d)) in BIVECTORS.iter().enumerate() {
            operator[(p, q)] = rm[a][b][d][c];
        }
    }
    let operator = (operator + operator.transpose()) * 0.5;
    let sup_norm = SymmetricEigen::new(operator).eigenvalues.amax();

    let mut ricci_frame = Matrix3::zeros();
    for b in 0..3 {
        for c in 0..3 {
            ricci_frame[(b, c)] = (0..3).map(|a| rm[a][b][c][a]).sum();
        }
    }
    let ricci_frame = (ricci_frame + ricci_frame.transpose()) * 0.5;
    let ricci = f_inv.transpose() * ricci_frame * f_inv;
    let ricci = (ricci + ricci.transpose()) * 0.5;

    Ok(Curvature {
        frame: f,
        sectional: [rm[0][1][1][0], rm[0][2][2][0], rm[1][2][2][1]],
        rm,
        operator,
        ricci_frame,
        ricci,
        sup_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    #[test]
    fn standard_nil_curvature() {
        let k = curvature(&LeftInvariantMetric::standard());
        assert!((k.sectional[0] + 0.75).abs() < 1e-15);
        assert!((k.sectional[1] - 0.25).abs() < 1e-15);
        assert!((k.sectional[2] - 0.25).abs() < 1e-15);
        assert!((k.ricci - Matrix3::from_diagonal(&Vector3::new(-0.5, -0.5, 0.5))).amax() < 1e-15);
        assert!((k.sup_norm - 0.75).abs() < 1e-15);
    }

    #[test]
    fn abelian_is_flat() {
        let g = Matrix3::new(2.0, 0.4, 0.0, 0.4, 1.0, 0.1, 0.0, 0.1, 3.0);
        let k = curvature_with(&StructureConstants::abelian(), &g).unwrap();
        assert_eq!(k.sup_norm, 0.0);
        assert_eq!(k.ricci, Matrix3::zeros());
    }

    #[test]
    fn rejects_indefinite() {
        let g = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(curvature_with(&StructureConstants::nil(), &g).is_err());
    }
}
