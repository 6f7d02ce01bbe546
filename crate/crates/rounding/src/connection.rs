//! Connection form of the fibration, its curvature on the base and the parallel correction.
//!
//! Sign conventions: the fibre direction with positive `dx3` is positive, `θ(V) = 2π`,
//! base cells are oriented by `(∂1, ∂2)` and `ω` is the fibre average of `dθ` on them.
//! With these choices `∫_Y ω = −2πk` on `Γ_k`.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use nil_core::coframe;
use rayon::prelude::*;
use serde::Serialize;

use crate::dec::pcg;
use crate::error::{Result, RoundingError};
use crate::fibration::{FiberWalker, FibrationData};
use crate::field::MetricField;
use crate::mesh::{MeshedNilmanifold, Reduced};
use crate::torus::TorusData;

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionData {
    /// Averaged connection form, one value per edge.
    pub theta: Vec<f64>,
    /// Curvature on the base cells `(i, j)`, index `i n2 + j`.
    pub omega: Vec<f64>,
    pub omega_prime: Vec<f64>,
    /// Correction on base edges, index `2 (i n2 + j) + a`.
    pub theta_bar: Vec<f64>,
    pub theta_prime: Vec<f64>,
    /// `∫_Y ω`.
    pub total_curvature: f64,
    /// `∫_Y ω′`.
    pub total_curvature_prime: f64,
    pub poisson_iterations: usize,
}

pub const POISSON_TOLERANCE: f64 = 1e-12;

/// `θ′(V)` is pinned to this value.
pub const FIBER_PERIOD: f64 = 2.0 * PI;

fn covector_to_frame(c: &Vector3<f64>, x1: f64) -> Vector3<f64> {
    coframe(x1).try_inverse().expect("unimodular").transpose() * c
}

fn covector_to_coordinate(c: &Vector3<f64>, x1: f64) -> Vector3<f64> {
    coframe(x1).transpose() * c
}

/// Differential of the deck element reached by an unwrapped offset.
fn deck_differential(q1: i64) -> Matrix3<f64> {
    let mut d = Matrix3::identity();
    d[(2, 1)] = q1 as f64;
    d
}

/// Averages `2π ĝ(V, ·) / ℓ²` over the circle action generated by `V` and returns
/// left-invariant-frame components.
///
/// Fibres are parametrized by `t = arclength / ℓ`. Covectors at `Φ_t(q)` are pulled back to
/// `q` by the linearized flow `dΦ_t`, integrated along the traced polyline.
pub fn averaged_connection(mesh: &MeshedNilmanifold, f: &MetricField, torus: &TorusData, fib: &FibrationData) -> Result<Vec<Vector3<f64>>> {
    let n = mesh.num_vertices();
    let h = mesh.spacing();
    let eta: Vec<Vector3<f64>> = (0..n).map(|v| f.values()[v] * fib.field[v] * (FIBER_PERIOD / fib.length[v].powi(2))).collect();
    let lifted_field = |v: usize, d: [i64; 3]| {
        let r = mesh.offset(v, d);
        deck_differential(r.q1) * fib.field[r.vertex]
    };
    let dv: Vec<Matrix3<f64>> = (0..n)
        .into_par_iter()
        .map(|v| {
            let mut m = Matrix3::zeros();
            for b in 0..3 {
                let mut e = [0; 3];
                e[b] = 1;
                let col = (lifted_field(v, e) - lifted_field(v, e.map(|x| -x))) / (2.0 * h[b]);
                m.set_column(b, &col);
            }
            m
        })
        .collect();
    let walker = FiberWalker::new(mesh, f, torus, &fib.phi);
    (0..n)
        .into_par_iter()
        .map(|v| {
            let fiber = walker.trace(v).ok_or(RoundingError::DisconnectedFiber { vertex: v, gap: f64::INFINITY })?;
            let count = fiber.points.len();
            let weights = fiber.weights();
            let mut flow = Matrix3::identity();
            let mut avg = Vector3::zeros();
            for s in 0..count {
                let p = fiber.points[s];
                let covector: Vector3<f64> = interpolate(mesh, v, p, Vector3::zeros(), |r| {
                    deck_differential(r.q1).try_inverse().expect("unimodular").transpose() * eta[r.vertex]
                });
                avg += flow.transpose() * covector * weights[s];
                let q = if s + 1 < count { fiber.points[s + 1] } else { [0.0, 0.0, count as f64] };
                let mid = [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, p[2] + 0.5];
                let grad: Matrix3<f64> = interpolate(mesh, v, mid, Matrix3::zeros(), |r| {
                    let d = deck_differential(r.q1);
                    d * dv[r.vertex] * d.try_inverse().expect("unimodular")
                }) * (fiber.segments[s] / fiber.length);
                flow = (Matrix3::identity() + grad + grad * grad * 0.5) * flow;
            }
            let along = avg.dot(&fib.field[v]);
            Ok(covector_to_frame(&(avg * (FIBER_PERIOD / along)), mesh.position(v)[0]))
        })
        .collect()
}

/// Trilinear interpolation at a fractional offset from `v` of data given per reached vertex.
fn interpolate<T>(mesh: &MeshedNilmanifold, v: usize, p: [f64; 3], zero: T, value: impl Fn(Reduced) -> T) -> T
where
    T: std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let base = p.map(|x| x.floor());
    let t = [p[0] - base[0], p[1] - base[1], p[2] - base[2]];
    let mut out = zero;
    for c in 0..8 {
        let s = [c & 1, c >> 1 & 1, c >> 2 & 1];
        let w: f64 = (0..3).map(|a| if s[a] == 1 { t[a] } else { 1.0 - t[a] }).product();
        if w != 0.0 {
            let d = std::array::from_fn(|a| base[a] as i64 + s[a] as i64);
            out = out + value(mesh.offset(v, d)) * w;
        }
    }
    out
}

/// Edge values of a covector field given in the left-invariant frame, by the trapezoid rule
/// in the chart of each edge's start.
pub fn integrate_covectors(mesh: &MeshedNilmanifold, frame: &[Vector3<f64>]) -> Vec<f64> {
    let h = mesh.spacing();
    (0..mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let (v, a) = (e / 3, e % 3);
            let mut d = [0; 3];
            d[a] = 1;
            let start = covector_to_coordinate(&frame[v], mesh.position(v)[0]);
            let end = covector_to_coordinate(&frame[mesh.neighbor(v, a)], mesh.lifted_x1(v, d));
            0.5 * h[a] * (start[a] + end[a])
        })
        .collect()
}

/// Base torus grid: periodic in both directions.
struct Base {
    n: [usize; 2],
}

impl Base {
    fn cell(&self, i: usize, j: usize) -> usize {
        (i % self.n[0]) * self.n[1] + j % self.n[1]
    }

    fn d1(&self, x: &[f64]) -> Vec<f64> {
        let [n1, n2] = self.n;
        (0..n1 * n2)
            .map(|p| {
                let (i, j) = (p / n2, p % n2);
                x[2 * p] + x[2 * self.cell(i + 1, j) + 1] - x[2 * self.cell(i, j + 1)] - x[2 * p + 1]
            })
            .collect()
    }

    fn d1_transpose(&self, y: &[f64]) -> Vec<f64> {
        let [n1, n2] = self.n;
        let mut out = vec![0.0; 2 * n1 * n2];
        for (p, w) in y.iter().enumerate() {
            let (i, j) = (p / n2, p % n2);
            out[2 * p] += w;
            out[2 * self.cell(i + 1, j) + 1] += w;
            out[2 * self.cell(i, j + 1)] -= w;
            out[2 * p + 1] -= w;
        }
        out
    }
}

pub fn connection_and_curvature(mesh: &MeshedNilmanifold, f: &MetricField, torus: &TorusData, fib: &FibrationData) -> Result<ConnectionData> {
    let [n1, n2, n3] = mesh.resolution();
    let eta = averaged_connection(mesh, f, torus, fib)?;
    let theta = integrate_covectors(mesh, &eta);
    let dtheta = mesh.d1(&theta);
    let base = Base { n: [n1, n2] };
    let mut omega = vec![0.0; n1 * n2];
    let mut cell_area = vec![0.0; n1 * n2];
    for v in 0..mesh.num_vertices() {
        let [i, j, _] = mesh.coords(v);
        let p = base.cell(i, j);
        omega[p] += dtheta[3 * v + 2] / n3 as f64;
        let c = [[0, 0], [1, 0], [1, 1], [0, 1]].map(|[a, b]| fib.phi.lifted(mesh, torus, v, [a, b, 0]));
        let shoelace: f64 = (0..4).map(|s| c[s][0] * c[(s + 1) % 4][1] - c[(s + 1) % 4][0] * c[s][1]).sum();
        cell_area[p] += 0.5 * shoelace / n3 as f64;
    }
    let total_curvature: f64 = omega.iter().sum();
    let area_sum: f64 = cell_area.iter().sum();
    let omega_prime: Vec<f64> = cell_area.iter().map(|a| total_curvature * a / area_sum).collect();
    let total_curvature_prime = omega_prime.iter().sum();

    let b = torus.lattice_gram();
    let binv = b.try_inverse().ok_or(RoundingError::DegeneratePeriods(b.determinant()))?;
    let hb = [1.0 / n1 as f64, 1.0 / n2 as f64];
    let star: Vec<f64> = (0..2 * n1 * n2)
        .map(|e| {
            let a = e % 2;
            b.determinant().sqrt() * hb[0] * hb[1] * binv[(a, a)] / (hb[a] * hb[a])
        })
        .collect();
    let rhs: Vec<f64> = omega_prime.iter().zip(&omega).map(|(a, b)| a - b).collect();
    let diag: Vec<f64> = (0..n1 * n2)
        .map(|p| {
            let (i, j) = (p / n2, p % n2);
            1.0 / star[2 * p] + 1.0 / star[2 * base.cell(i + 1, j) + 1] + 1.0 / star[2 * base.cell(i, j + 1)] + 1.0 / star[2 * p + 1]
        })
        .collect();
    let mean = rhs.iter().sum::<f64>() / (n1 * n2) as f64;
    let rhs: Vec<f64> = rhs.iter().map(|x| x - mean).collect();
    let op = |w: &[f64]| {
        let t: Vec<f64> = base.d1_transpose(w).iter().zip(&star).map(|(x, s)| x / s).collect();
        base.d1(&t)
    };
    let (w, poisson_iterations) = pcg(op, &rhs, &diag, POISSON_TOLERANCE, 50 * n1 * n2).map_err(|e| match e {
        RoundingError::NoConvergence { residual, iterations, .. } => RoundingError::NoConvergence { solver: "base Poisson", residual, iterations },
        other => other,
    })?;
    let theta_bar: Vec<f64> = base.d1_transpose(&w).iter().zip(&star).map(|(x, s)| x / s).collect();
    let mut theta_prime = theta.clone();
    for v in 0..mesh.num_vertices() {
        let [i, j, _] = mesh.coords(v);
        let p = base.cell(i, j);
        theta_prime[3 * v] += theta_bar[2 * p];
        theta_prime[3 * v + 1] += theta_bar[2 * p + 1];
    }
    Ok(ConnectionData { theta, omega, omega_prime, theta_bar, theta_prime, total_curvature, total_curvature_prime, poisson_iterations })
}

/// Fibre average of `d1 θ` over the base cells, for any connection cochain.
pub fn base_curvature(mesh: &MeshedNilmanifold, theta: &[f64]) -> Vec<f64> {
    let [n1, n2, n3] = mesh.resolution();
    let dtheta = mesh.d1(theta);
    let mut out = vec![0.0; n1 * n2];
    for v in 0..mesh.num_vertices() {
        let [i, j, _] = mesh.coords(v);
        out[i * n2 + j] += dtheta[3 * v + 2] / n3 as f64;
    }
    out
}
