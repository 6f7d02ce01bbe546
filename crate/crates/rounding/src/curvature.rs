//! Christoffel symbols and curvature from a finite-difference jet.

use nalgebra::{Matrix3, SymmetricEigen};
use nil_core::curvature::orthonormal_frame;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, RoundingError};
use crate::fd::{mesh_jet, Jet};
use crate::field::MetricField;
use crate::mesh::MeshedNilmanifold;

type T3 = [[[f64; 3]; 3]; 3];
type T4 = [[[[f64; 3]; 3]; 3]; 3];

/// Levi-Civita connection of a jet in coordinates.
#[derive(Debug, Clone)]
pub struct Connection {
    pub g: Matrix3<f64>,
    pub ginv: Matrix3<f64>,
    /// `dginv[i] = ∂_i g^{-1}`.
    pub dginv: [Matrix3<f64>; 3],
    /// `low[m][j][k] = Γ_{m,jk}`.
    pub low: T3,
    /// `gamma[l][j][k] = Γ^l_{jk}`.
    pub gamma: T3,
    /// `dgamma[i][l][j][k] = ∂_i Γ^l_{jk}`.
    pub dgamma: T4,
}

impl Connection {
    pub fn new(jet: &Jet) -> Option<Self> {
        let ginv = jet.g.try_inverse()?;
        let dginv = std::array::from_fn(|i| -(ginv * jet.dg[i] * ginv));
        let mut low = [[[0.0; 3]; 3]; 3];
        let mut dlow = [[[[0.0; 3]; 3]; 3]; 3];
        for m in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    low[m][j][k] = 0.5 * (jet.dg[j][(m, k)] + jet.dg[k][(m, j)] - jet.dg[m][(j, k)]);
                    for (i, slot) in dlow.iter_mut().enumerate() {
                        slot[m][j][k] = 0.5 * (jet.ddg[i][j][(m, k)] + jet.ddg[i][k][(m, j)] - jet.ddg[i][m][(j, k)]);
                    }
                }
            }
        }
        let mut gamma = [[[0.0; 3]; 3]; 3];
        let mut dgamma = [[[[0.0; 3]; 3]; 3]; 3];
        for l in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let mut s = 0.0;
                    for m in 0..3 {
                        s += ginv[(l, m)] * low[m][j][k];
                    }
                    gamma[l][j][k] = s;
                    for i in 0..3 {
                        let mut d = 0.0;
                        for m in 0..3 {
                            d += dginv[i][(l, m)] * low[m][j][k] + ginv[(l, m)] * dlow[i][m][j][k];
                        }
                        dgamma[i][l][j][k] = d;
                    }
                }
            }
        }
        Some(Self { g: jet.g, ginv, dginv, low, gamma, dgamma })
    }

    /// `rm[i][j][k][l] = <R(∂_i, ∂_j) ∂_k, ∂_l>` with `R(X,Y) = [∇_X, ∇_Y] − ∇_[X,Y]`.
    pub fn riemann(&self) -> T4 {
        let gm = &self.gamma;
        let mut up = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let mut v = self.dgamma[i][l][j][k] - self.dgamma[j][l][i][k];
                        for m in 0..3 {
                            v += gm[m][j][k] * gm[l][i][m] - gm[m][i][k] * gm[l][j][m];
                        }
                        up[i][j][k][l] = v;
                    }
                }
            }
        }
        let mut rm = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        rm[i][j][k][l] = (0..3).map(|p| self.g[(l, p)] * up[i][j][k][p]).sum();
                    }
                }
            }
        }
        rm
    }

    /// `Ric_jk = R_ijk^i`, without forming the full tensor.
    pub fn ricci(&self) -> Matrix3<f64> {
        let gm = &self.gamma;
        let mut ric = Matrix3::zeros();
        for j in 0..3 {
            for k in j..3 {
                let mut v = 0.0;
                for i in 0..3 {
                    v += self.dgamma[i][i][j][k] - self.dgamma[j][i][i][k];
                    for m in 0..3 {
                        v += gm[m][j][k] * gm[i][i][m] - gm[m][i][k] * gm[i][j][m];
                    }
                }
                ric[(j, k)] = v;
                ric[(k, j)] = v;
            }
        }
        ric
    }

    /// `Γ_j = g^{pq} Γ_{j,pq}` and its derivatives `∂_i Γ_j`.
    pub fn contracted(&self, jet: &Jet) -> ([f64; 3], [[f64; 3]; 3]) {
        let mut c = [0.0; 3];
        let mut dc = [[0.0; 3]; 3];
        for j in 0..3 {
            for p in 0..3 {
                for q in 0..3 {
                    let a = jet.dg[p][(q, j)] - 0.5 * jet.dg[j][(p, q)];
                    c[j] += self.ginv[(p, q)] * a;
                    for i in 0..3 {
                        let da = jet.ddg[i][p][(q, j)] - 0.5 * jet.ddg[i][j][(p, q)];
                        dc[i][j] += self.dginv[i][(p, q)] * a + self.ginv[(p, q)] * da;
                    }
                }
            }
        }
        (c, dc)
    }
}

const BIVECTORS: [(usize, usize); 3] = [(1, 2), (2, 0), (0, 1)];

/// Curvature at one point.
#[derive(Debug, Clone, Serialize)]
pub struct PointCurvature {
    /// Ricci tensor in coordinates.
    pub ricci: Matrix3<f64>,
    /// Eigenvalues of the curvature operator, ascending.
    pub operator_eigenvalues: [f64; 3],
    pub sup_norm: f64,
}

pub fn point_curvature(jet: &Jet) -> Option<PointCurvature> {
    let conn = Connection::new(jet)?;
    let rm = conn.riemann();
    let mut ricci = Matrix3::zeros();
    for j in 0..3 {
        for k in 0..3 {
            let mut s = 0.0;
            for i in 0..3 {
                for l in 0..3 {
                    s += conn.ginv[(i, l)] * rm[i][j][k][l];
                }
            }
            ricci[(j, k)] = s;
        }
    }
    let f = orthonormal_frame(&conn.g);
    let mut operator = Matrix3::zeros();
    for (p, &(a, b)) in BIVECTORS.iter().enumerate() {
        for (q, &(c, d)) in BIVECTORS.iter().enumerate() {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        for l in 0..3 {
                            s += rm[i][j][k][l] * f[(i, a)] * f[(j, b)] * f[(k, d)] * f[(l, c)];
                        }
                    }
                }
            }
            operator[(p, q)] = s;
        }
    }
    let operator = (operator + operator.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(operator).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let sup_norm = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Some(PointCurvature { ricci: (ricci + ricci.transpose()) * 0.5, operator_eigenvalues: [ev[0], ev[1], ev[2]], sup_norm })
}

/// Discrete curvature of a field: the supremum of `|Rm|` and the per-vertex data.
#[derive(Debug, Clone, Serialize)]
pub struct DiscreteCurvature {
    pub sup_rm: f64,
    pub vertices: Vec<PointCurvature>,
}

pub const MIN_CURVATURE_RESOLUTION: usize = 8;

pub fn discrete_curvature(mesh: &MeshedNilmanifold, f: &MetricField) -> Result<DiscreteCurvature> {
    f.check_mesh(mesh)?;
    if mesh.resolution().iter().any(|&n| n < MIN_CURVATURE_RESOLUTION) {
        return Err(RoundingError::Resolution(mesh.resolution(), format!("curvature needs {MIN_CURVATURE_RESOLUTION} per axis")));
    }
    let frame = f.frame_values(mesh);
    let vertices = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| point_curvature(&mesh_jet(mesh, &frame, v)).ok_or(RoundingError::NotPositiveDefinite { vertex: v }))
        .collect::<Result<Vec<_>>>()?;
    let sup_rm = vertices.iter().map(|c| c.sup_norm).fold(0.0, f64::max);
    Ok(DiscreteCurvature { sup_rm, vertices })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::pullback_homogeneous;
    use nil_core::{coframe_inverse, curvature, LeftInvariantMetric};

    #[test]
    fn homogeneous_pullback_matches_exact_curvature() {
        let mesh = MeshedNilmanifold::new("Gamma1", 1, [8, 8, 8]).unwrap();
        let g = LeftInvariantMetric::new(Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 0.7)).unwrap();
        let exact = curvature(&g);
        let c = discrete_curvature(&mesh, &pullback_homogeneous(&g, &mesh)).unwrap();
        assert!((c.sup_rm - exact.sup_norm).abs() < 1e-9);
        for v in [0, 100, 511] {
            let x1 = mesh.position(v)[0];
            let ji = coframe_inverse(x1);
            let ric_frame = ji.transpose() * c.vertices[v].ricci * ji;
            assert!((ric_frame - exact.ricci).amax() < 1e-9, "{ric_frame} vs {}", exact.ricci);
        }
    }
}
