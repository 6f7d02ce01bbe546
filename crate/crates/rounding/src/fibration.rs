//! Circle fibres of the period map, their lengths and the vertical field.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;
use serde::Serialize;

use crate::dec::HarmonicBasis;
use crate::error::{Result, RoundingError};
use crate::fd::vertex_covector;
use crate::field::{to_coordinate, MetricField};
use crate::mesh::MeshedNilmanifold;
use crate::torus::{PeriodMap, TorusData};

/// Smallest accepted ratio of the singular values of `dφ`.
pub const RANK_TOLERANCE: f64 = 1e-3;
/// Two traced points with the same `φ`-value closer than this many base cells are the same.
pub const CLOSING_TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, Serialize)]
pub struct FibrationData {
    pub phi: PeriodMap,
    /// Length of the fibre through each vertex.
    pub length: Vec<f64>,
    /// Positively oriented fibre tangent with `|V| = ℓ`, in coordinates at each vertex.
    pub field: Vec<Vector3<f64>>,
    pub min_rank_ratio: f64,
    pub max_closing_gap: f64,
}

/// Shared data for walking fibres in the chart of a vertex.
pub struct FiberWalker<'a> {
    pub mesh: &'a MeshedNilmanifold,
    pub torus: &'a TorusData,
    pub phi: &'a PeriodMap,
    pub frame: Vec<Matrix3<f64>>,
}

/// A traced fibre: one point per level as fractional offsets `(di, dj, dl)` from its start.
#[derive(Debug, Clone)]
pub struct Fiber {
    pub points: Vec<[f64; 3]>,
    /// Metric length of the segment leaving each point.
    pub segments: Vec<f64>,
    pub length: f64,
    pub closing_gap: f64,
}

impl Fiber {
    /// Trapezoid weights of the points, summing to one.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.segments.len();
        (0..n).map(|s| 0.5 * (self.segments[s] + self.segments[(s + n - 1) % n]) / self.length).collect()
    }
}

const NEWTON_STEPS: usize = 30;
const NEWTON_TOLERANCE: f64 = 1e-13;

impl<'a> FiberWalker<'a> {
    pub fn new(mesh: &'a MeshedNilmanifold, f: &MetricField, torus: &'a TorusData, phi: &'a PeriodMap) -> Self {
        Self { mesh, torus, phi, frame: f.frame_values(mesh) }
    }

    fn phi_at(&self, v: usize, d: [i64; 3]) -> Vector2<f64> {
        self.phi.lifted(self.mesh, self.torus, v, d)
    }

    /// Coordinate metric at a fractional offset from `v`, trilinear in the lifted values.
    pub fn metric_at(&self, v: usize, p: [f64; 3]) -> Matrix3<f64> {
        let base = p.map(|x| x.floor());
        let t = [p[0] - base[0], p[1] - base[1], p[2] - base[2]];
        let mut g = Matrix3::zeros();
        for c in 0..8 {
            let s = [c & 1, c >> 1 & 1, c >> 2 & 1];
            let w: f64 = (0..3).map(|a| if s[a] == 1 { t[a] } else { 1.0 - t[a] }).product();
            if w == 0.0 {
                continue;
            }
            let d = std::array::from_fn(|a| base[a] as i64 + s[a] as i64);
            let r = self.mesh.offset(v, d);
            g += to_coordinate(&self.frame[r.vertex], self.mesh.lifted_x1(v, d)) * w;
        }
        g
    }

    /// Point of level `dl` where the bilinear interpolant of `φ` equals `target`, starting
    /// the search at `(a, b)`.
    fn solve_level(&self, v: usize, dl: i64, target: Vector2<f64>, mut a: f64, mut b: f64) -> Option<(f64, f64)> {
        let limit = self.mesh.resolution()[0].max(self.mesh.resolution()[1]) as f64;
        let mut cell = (a.floor() as i64, b.floor() as i64);
        for _ in 0..NEWTON_STEPS {
            let c = |di: i64, dj: i64| self.phi_at(v, [cell.0 + di, cell.1 + dj, dl]);
            let (p00, p10, p01, p11) = (c(0, 0), c(1, 0), c(0, 1), c(1, 1));
            let mut u = (a - cell.0 as f64).clamp(0.0, 1.0);
            let mut w = (b - cell.1 as f64).clamp(0.0, 1.0);
            for _ in 0..NEWTON_STEPS {
                let val = p00 * ((1.0 - u) * (1.0 - w)) + p10 * (u * (1.0 - w)) + p01 * ((1.0 - u) * w) + p11 * (u * w);
                let du = (p10 - p00) * (1.0 - w) + (p11 - p01) * w;
                let dw = (p01 - p00) * (1.0 - u) + (p11 - p10) * u;
                let jac = Matrix2::from_columns(&[du, dw]);
                let step = jac.try_inverse()? * (target - val);
                u += step[0];
                w += step[1];
                if step.amax() < NEWTON_TOLERANCE {
                    break;
                }
            }
            a = cell.0 as f64 + u;
            b = cell.1 as f64 + w;
            let eps = 1e-9;
            let next = (
                if u < -eps { cell.0 - 1 } else if u > 1.0 + eps { cell.0 + 1 } else { cell.0 },
                if w < -eps { cell.1 - 1 } else if w > 1.0 + eps { cell.1 + 1 } else { cell.1 },
            );
            if next == cell {
                return Some((a, b));
            }
            if (next.0 as f64).abs() > limit || (next.1 as f64).abs() > limit {
                return None;
            }
            cell = next;
        }
        None
    }

    /// Traces the fibre through `v` once around, upwards in the third index.
    pub fn trace(&self, v: usize) -> Option<Fiber> {
        let n3 = self.mesh.resolution()[2];
        let h = self.mesh.spacing();
        let target = self.phi.values[v];
        let mut points = Vec::with_capacity(n3 + 1);
        points.push([0.0, 0.0, 0.0]);
        let (mut a, mut b) = (0.0, 0.0);
        for s in 1..=n3 {
            (a, b) = self.solve_level(v, s as i64, target, a, b)?;
            points.push([a, b, s as f64]);
        }
        let end = points.pop().expect("n3 + 1 points");
        let closing_gap = end[0].abs().max(end[1].abs());
        let segments: Vec<f64> = (0..n3)
            .map(|s| {
                let p = points[s];
                let q = if s + 1 < n3 { points[s + 1] } else { end };
                let d = Vector3::new((q[0] - p[0]) * h[0], (q[1] - p[1]) * h[1], h[2]);
                let g = self.metric_at(v, [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, p[2] + 0.5]);
                (d.transpose() * g * d)[0].sqrt()
            })
            .collect();
        let length = segments.iter().sum();
        Some(Fiber { points, segments, length, closing_gap })
    }
}

/// Covectors `dφ` at `v` as the rows of a 2×3 matrix, coordinate components.
pub fn differential(mesh: &MeshedNilmanifold, basis: &HarmonicBasis, v: usize) -> [Vector3<f64>; 2] {
    std::array::from_fn(|a| Vector3::from(vertex_covector(mesh, &basis.forms[a], v)))
}

/// Ratio of the singular values of `dφ` at a point with metric `g`.
pub fn rank_ratio(c: &[Vector3<f64>; 2], g: &Matrix3<f64>) -> f64 {
    let ginv = g.try_inverse().expect("SPD");
    let s = Matrix2::from_fn(|a, b| (c[a].transpose() * ginv * c[b])[0]);
    let ev = s.symmetric_eigenvalues();
    (ev.min().max(0.0) / ev.max()).sqrt()
}

pub fn fiber_extraction(mesh: &MeshedNilmanifold, f: &MetricField, basis: &HarmonicBasis, torus: &TorusData, phi: PeriodMap) -> Result<FibrationData> {
    f.check_mesh(mesh)?;
    let ranks: Vec<f64> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| rank_ratio(&differential(mesh, basis, v), &f.values()[v]))
        .collect();
    let (worst, &min_rank_ratio) = ranks.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty mesh");
    if min_rank_ratio < RANK_TOLERANCE {
        return Err(RoundingError::RankDeficient { vertex: worst, ratio: min_rank_ratio });
    }
    let walker = FiberWalker::new(mesh, f, torus, &phi);
    let traced: Vec<Option<(f64, f64)>> = (0..mesh.num_vertices())
        .into_par_iter()
        .map(|v| walker.trace(v).map(|fib| (fib.length, fib.closing_gap)))
        .collect();
    let mut length = Vec::with_capacity(traced.len());
    let mut max_closing_gap = 0.0f64;
    for (v, t) in traced.iter().enumerate() {
        let (l, gap) = t.ok_or(RoundingError::DisconnectedFiber { vertex: v, gap: f64::INFINITY })?;
        if gap > CLOSING_TOLERANCE {
            return Err(RoundingError::DisconnectedFiber { vertex: v, gap });
        }
        max_closing_gap = max_closing_gap.max(gap);
        length.push(l);
    }
    let field = (0..mesh.num_vertices())
        .map(|v| {
            let [c1, c2] = differential(mesh, basis, v);
            let mut t = c1.cross(&c2);
            if t[2] < 0.0 {
                t = -t;
            }
            let g = &f.values()[v];
            t * (length[v] / (t.transpose() * g * t)[0].sqrt())
        })
        .collect();
    drop(walker);
    Ok(FibrationData { phi, length, field, min_rank_ratio, max_closing_gap })
}

/// Angle in degrees between `V` and the central direction `∂3` in the metric `g`.
pub fn central_angle(v: &Vector3<f64>, g: &Matrix3<f64>) -> f64 {
    let e3 = Vector3::z();
    let c = (v.transpose() * g * e3)[0] / ((v.transpose() * g * v)[0] * g[(2, 2)]).sqrt();
    c.clamp(-1.0, 1.0).acos().to_degrees()
}
