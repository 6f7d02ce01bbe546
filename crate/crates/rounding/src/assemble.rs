//! The Nil metric built from the flat base, the corrected connection and a scale `a`.

use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::connection::ConnectionData;
use crate::dec::HarmonicBasis;
use crate::error::{Result, RoundingError};
use crate::fd::vertex_covector;
use crate::field::MetricField;
use crate::mesh::MeshedNilmanifold;
use crate::torus::TorusData;

/// `ĝ_a = a⁻² φ*g_Y + s⁻² θ′²` with `s = a² |∫ω| / area(Y)`, so that the horizontal lifts
/// `U1, U2` of an orthonormal pair scaled by `a` and `[U1, U2]` are orthonormal.
pub fn assemble(mesh: &MeshedNilmanifold, basis: &HarmonicBasis, torus: &TorusData, conn: &ConnectionData, a: f64) -> Result<MetricField> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(RoundingError::InvalidArgument(format!("scale {a}")));
    }
    let s = a * a * conn.total_curvature.abs() / torus.area;
    let values = (0..mesh.num_vertices())
        .map(|v| {
            let c: [Vector3<f64>; 2] = std::array::from_fn(|i| Vector3::from(vertex_covector(mesh, &basis.forms[i], v)));
            let t = Vector3::from(vertex_covector(mesh, &conn.theta_prime, v));
            let mut g = t * t.transpose() / (s * s);
            for i in 0..2 {
                for j in 0..2 {
                    g += c[i] * c[j].transpose() * (torus.metric[(i, j)] / (a * a));
                }
            }
            g
        })
        .collect::<Vec<Matrix3<f64>>>();
    MetricField::new(mesh, values)
}

#[derive(Debug, Clone, Serialize)]
pub struct Assembly {
    /// Volume of `ĝ_1`.
    pub unit_volume: f64,
    pub a_bar: f64,
    pub volume: f64,
    pub covering_order: usize,
}

/// Picks `ā = (vol(ĝ_1) / order)^{1/4}` from `vol(ĝ_a) = a⁻⁴ vol(ĝ_1)`.
pub fn assemble_and_normalize(
    mesh: &MeshedNilmanifold,
    basis: &HarmonicBasis,
    torus: &TorusData,
    conn: &ConnectionData,
    covering_order: usize,
) -> Result<(MetricField, Assembly)> {
    if covering_order == 0 {
        return Err(RoundingError::InvalidArgument("covering order 0".into()));
    }
    let unit = assemble(mesh, basis, torus, conn, 1.0)?;
    let unit_volume = unit.volume(mesh);
    let a_bar = (unit_volume / covering_order as f64).powf(0.25);
    let out = assemble(mesh, basis, torus, conn, a_bar)?;
    let volume = out.volume(mesh);
    Ok((out, Assembly { unit_volume, a_bar, volume, covering_order }))
}
