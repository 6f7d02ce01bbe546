//! The flat torus of a harmonic basis and the period map onto it.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::dec::HarmonicBasis;
use crate::error::{Result, RoundingError};
use crate::mesh::MeshedNilmanifold;

/// `Y = (H¹)* / H₁` in the coordinates dual to the basis forms.
#[derive(Debug, Clone, Serialize)]
pub struct TorusData {
    /// Column `c` holds the periods of both basis forms over the loop along axis `c`.
    pub periods: Matrix2<f64>,
    /// Flat metric on `Y`, the inverse of the basis Gram matrix.
    pub metric: Matrix2<f64>,
    pub area: f64,
    /// Base mesh resolution `(n1, n2)`.
    pub base: [usize; 2],
}

/// Periods below this fraction of the Gram scale count as degenerate.
pub const PERIOD_TOLERANCE: f64 = 1e-8;

/// Sum of a 1-cochain over the closed loop through vertex 0 along axis `a` (0 or 1).
pub fn loop_integral(mesh: &MeshedNilmanifold, x: &[f64], a: usize) -> f64 {
    let mut v = 0;
    let mut sum = 0.0;
    for _ in 0..mesh.resolution()[a] {
        sum += x[3 * v + a];
        v = mesh.neighbor(v, a);
    }
    debug_assert_eq!(v, 0);
    sum
}

pub fn build_torus(basis: &HarmonicBasis, mesh: &MeshedNilmanifold) -> Result<TorusData> {
    let periods = Matrix2::from_fn(|i, c| loop_integral(mesh, &basis.forms[i], c));
    let metric = basis.gram.try_inverse().ok_or(RoundingError::DegeneratePeriods(basis.gram.determinant()))?;
    let det = periods.determinant();
    if !(det.abs() > PERIOD_TOLERANCE) {
        return Err(RoundingError::DegeneratePeriods(det));
    }
    let area = det.abs() * metric.determinant().sqrt();
    let n = mesh.resolution();
    Ok(TorusData { periods, metric, area, base: [n[0], n[1]] })
}

impl TorusData {
    /// Gram matrix of the period lattice basis in the flat metric.
    pub fn lattice_gram(&self) -> Matrix2<f64> {
        self.periods.transpose() * self.metric * self.periods
    }

    pub fn period(&self, c: usize) -> Vector2<f64> {
        self.periods.column(c).into_owned()
    }

    /// Distance from `y` to the nearest lattice point in the flat metric.
    pub fn distance_to_lattice(&self, y: Vector2<f64>) -> f64 {
        let inv = self.periods.try_inverse().expect("nondegenerate periods");
        let t = inv * y;
        let base = Vector2::new(t[0].round(), t[1].round());
        let mut best = f64::INFINITY;
        for di in -1..=1 {
            for dj in -1..=1 {
                let r = y - self.periods * (base + Vector2::new(di as f64, dj as f64));
                best = best.min((r.transpose() * self.metric * r)[0].sqrt());
            }
        }
        best
    }
}

/// Lift of the period map to the fundamental box, based at `basepoint`.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodMap {
    pub basepoint: usize,
    pub values: Vec<Vector2<f64>>,
    /// Largest failure of an edge to carry its own integral, modulo periods, in the flat metric.
    pub path_defect: f64,
}

/// Tolerated path dependence relative to the diameter scale of `Y`.
pub const PATH_TOLERANCE: f64 = 1e-8;

/// Integrates along axis 0 from `basepoint`, then axis 1, then axis 2, staying in the box.
pub fn period_map(mesh: &MeshedNilmanifold, basis: &HarmonicBasis, torus: &TorusData, basepoint: usize) -> Result<PeriodMap> {
    period_map_ordered(mesh, basis, torus, basepoint, [0, 1, 2])
}

/// Same as [`period_map`] with the tree built along the axes in `order`.
pub fn period_map_ordered(
    mesh: &MeshedNilmanifold,
    basis: &HarmonicBasis,
    torus: &TorusData,
    basepoint: usize,
    order: [usize; 3],
) -> Result<PeriodMap> {
    let n = mesh.resolution();
    let edge = |v: usize, a: usize| Vector2::new(basis.forms[0][3 * v + a], basis.forms[1][3 * v + a]);
    let mut raw = vec![Vector2::zeros(); mesh.num_vertices()];
    let mut level = vec![0];
    for &a in &order {
        let mut next = Vec::with_capacity(level.len() * n[a]);
        for &v0 in &level {
            let mut v = v0;
            next.push(v);
            for _ in 1..n[a] {
                let w = mesh.neighbor(v, a);
                raw[w] = raw[v] + edge(v, a);
                v = w;
                next.push(v);
            }
        }
        level = next;
    }
    let shift = raw[basepoint];
    let values: Vec<Vector2<f64>> = raw.iter().map(|x| x - shift).collect();
    let mut defect = 0.0f64;
    for v in 0..mesh.num_vertices() {
        for a in 0..3 {
            let r = values[v] + edge(v, a) - values[mesh.neighbor(v, a)];
            defect = defect.max(torus.distance_to_lattice(r));
        }
    }
    let scale = torus.area.sqrt();
    if defect > PATH_TOLERANCE * scale {
        return Err(RoundingError::PathDependence(defect));
    }
    Ok(PeriodMap { basepoint, values, path_defect: defect })
}

impl PeriodMap {
    /// Value at the unwrapped grid point `(i, j, l)` relative to the box.
    pub fn lifted(&self, mesh: &MeshedNilmanifold, torus: &TorusData, v: usize, d: [i64; 3]) -> Vector2<f64> {
        let r = mesh.offset(v, d);
        self.values[r.vertex] + torus.period(0) * r.q1 as f64 + torus.period(1) * r.q2 as f64
    }
}
