//! Ricci–DeTurck smoothing with a homogeneous background.
//!
//! `∂_t g = −2 Ric + L_W g` with `W^k = g^{pq}(Γ^k_pq − Γ̃^k_pq)`, where `g̃` is the
//! pullback of the frame average of the current field. The second derivatives hidden in
//! `L_W g` are taken from the same stencils as those in `Ric`, so the principal part is
//! exactly `g^{ab} D_a D_b g`. Time stepping is Heun's method.

use nalgebra::{Matrix3, SymmetricEigen};
use nil_core::coframe_inverse;
use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::Connection;
use crate::error::{Result, RoundingError};
use crate::fd::{jet_from_samples, mesh_jet};
use crate::field::{sym, to_coordinate, to_frame, MetricField};
use crate::mesh::MeshedNilmanifold;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothOptions {
    /// Fraction of the stability limit used when `dt` is not given.
    pub cfl: f64,
    pub dt: Option<f64>,
}

impl Default for SmoothOptions {
    fn default() -> Self {
        Self { cfl: 0.5, dt: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothReport {
    pub tau: f64,
    pub steps: usize,
    pub dt: f64,
    pub dt_limit: f64,
    /// L² deviation from the frame average, before the first and after every step.
    pub energy: Vec<f64>,
    /// Inhomogeneity of the Ricci tensor in the left-invariant frame: sup, first and
    /// second differences, before and after.
    pub derivatives_before: [f64; 3],
    pub derivatives_after: [f64; 3],
}

/// Stability limit `1 / (2 max λ(g^{-1}) Σ h_a^{-2})` of Heun's method for the principal part.
pub fn step_limit(mesh: &MeshedNilmanifold, frame: &[Matrix3<f64>]) -> f64 {
    let h = mesh.spacing();
    let lam = (0..frame.len())
        .into_par_iter()
        .map(|v| {
            let g = to_coordinate(&frame[v], mesh.position(v)[0]);
            1.0 / SymmetricEigen::new(g).eigenvalues.min()
        })
        .reduce(|| 0.0, f64::max);
    1.0 / (2.0 * lam * h.iter().map(|x| 1.0 / (x * x)).sum::<f64>())
}

/// Right-hand side in the left-invariant frame.
pub fn deturck_rhs(mesh: &MeshedNilmanifold, frame: &[Matrix3<f64>], background: &Matrix3<f64>) -> Vec<Matrix3<f64>> {
    let h = mesh.spacing();
    let n1 = mesh.resolution()[0];
    let bconn: Vec<Connection> = (0..n1)
        .map(|i| {
            let x1 = i as f64 * h[0];
            let jet = jet_from_samples(|d| to_coordinate(background, x1 + d[0] as f64 * h[0]), h);
            Connection::new(&jet).expect("background is SPD")
        })
        .collect();
    (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            let jet = mesh_jet(mesh, frame, v);
            let conn = Connection::new(&jet).expect("field is SPD");
            let b = &bconn[mesh.coords(v)[0]];
            let ric = conn.ricci();
            let (c, dc) = conn.contracted(&jet);
            let mut t = [0.0; 3];
            let mut dt = [[0.0; 3]; 3];
            for l in 0..3 {
                for p in 0..3 {
                    for q in 0..3 {
                        t[l] += conn.ginv[(p, q)] * b.gamma[l][p][q];
                        for i in 0..3 {
                            dt[i][l] += conn.dginv[i][(p, q)] * b.gamma[l][p][q] + conn.ginv[(p, q)] * b.dgamma[i][l][p][q];
                        }
                    }
                }
            }
            let mut bk = [0.0; 3];
            let mut dbk = [[0.0; 3]; 3];
            for k in 0..3 {
                for l in 0..3 {
                    bk[k] += jet.g[(k, l)] * t[l];
                    for i in 0..3 {
                        dbk[i][k] += jet.dg[i][(k, l)] * t[l] + jet.g[(k, l)] * dt[i][l];
                    }
                }
            }
            let w: [f64; 3] = std::array::from_fn(|k| c[k] - bk[k]);
            let mut rhs = Matrix3::zeros();
            for j in 0..3 {
                for k in 0..3 {
                    let mut lw = dc[j][k] + dc[k][j] - dbk[j][k] - dbk[k][j];
                    for (m, wm) in w.iter().enumerate() {
                        lw -= 2.0 * conn.gamma[m][j][k] * wm;
                    }
                    rhs[(j, k)] = -2.0 * ric[(j, k)] + lw;
                }
            }
            let ji = coframe_inverse(mesh.position(v)[0]);
            sym(&(ji.transpose() * rhs * ji))
        })
        .collect()
}

pub fn frame_mean(frame: &[Matrix3<f64>]) -> Matrix3<f64> {
    frame.iter().fold(Matrix3::zeros(), |acc, g| acc + g) / frame.len() as f64
}

/// `Σ |G_X − mean|² h1 h2 h3`.
pub fn deviation_energy(mesh: &MeshedNilmanifold, frame: &[Matrix3<f64>]) -> f64 {
    let mean = frame_mean(frame);
    frame.iter().map(|g| (g - mean).norm_squared()).sum::<f64>() * mesh.cell_volume()
}

/// Sup of the left-invariant-frame Ricci tensor and of its first and second differences.
pub fn ricci_inhomogeneity(mesh: &MeshedNilmanifold, frame: &[Matrix3<f64>]) -> [f64; 3] {
    let ric: Vec<Matrix3<f64>> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| {
            let r = Connection::new(&mesh_jet(mesh, frame, v)).expect("SPD").ricci();
            to_frame(&r, mesh.position(v)[0])
        })
        .collect();
    let h = mesh.spacing();
    let mut out = [0.0f64; 3];
    for v in 0..mesh.num_vertices() {
        out[0] = out[0].max(ric[v].amax());
        for (a, ha) in h.iter().enumerate() {
            let p = &ric[mesh.neighbor(v, a)];
            let m = &ric[mesh.back_neighbor(v, a)];
            out[1] = out[1].max(((p - m) / (2.0 * ha)).amax());
            out[2] = out[2].max(((p - ric[v] * 2.0 + m) / (ha * ha)).amax());
        }
    }
    out
}

/// Runs the flow for time `tau`.
pub fn smooth(mesh: &MeshedNilmanifold, f: &MetricField, tau: f64, opts: &SmoothOptions) -> Result<(MetricField, SmoothReport)> {
    f.check_mesh(mesh)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(RoundingError::InvalidArgument(format!("smoothing time {tau}")));
    }
    if !(opts.cfl > 0.0 && opts.cfl <= 1.0) {
        return Err(RoundingError::InvalidArgument(format!("cfl fraction {}", opts.cfl)));
    }
    let mut frame = f.frame_values(mesh);
    let limit = step_limit(mesh, &frame);
    let requested = match opts.dt {
        Some(dt) if dt > limit => return Err(RoundingError::Cfl { dt, limit }),
        Some(dt) if dt <= 0.0 => return Err(RoundingError::InvalidArgument(format!("time step {dt}"))),
        Some(dt) => dt,
        None => opts.cfl * limit,
    };
    let steps = if tau == 0.0 { 0 } else { (tau / requested).ceil() as usize };
    let dt = if steps == 0 { 0.0 } else { tau / steps as f64 };
    let derivatives_before = ricci_inhomogeneity(mesh, &frame);
    let mut energy = vec![deviation_energy(mesh, &frame)];
    for _ in 0..steps {
        let k1 = deturck_rhs(mesh, &frame, &frame_mean(&frame));
        let mid: Vec<Matrix3<f64>> = frame.iter().zip(&k1).map(|(g, k)| g + k * dt).collect();
        let k2 = deturck_rhs(mesh, &mid, &frame_mean(&mid));
        for ((g, a), b) in frame.iter_mut().zip(&k1).zip(&k2) {
            *g += (a + b) * (0.5 * dt);
        }
        if let Some(vertex) = frame.iter().position(|g| nalgebra::Cholesky::new(*g).is_none()) {
            return Err(RoundingError::NotPositiveDefinite { vertex });
        }
        energy.push(deviation_energy(mesh, &frame));
    }
    let derivatives_after = ricci_inhomogeneity(mesh, &frame);
    let out = MetricField::from_frame_values(mesh, &frame)?;
    Ok((out, SmoothReport { tau, steps, dt, dt_limit: limit, energy, derivatives_before, derivatives_after }))
}
