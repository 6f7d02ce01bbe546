//! The developing map: the frame transported by the Nil connection and the map it integrates to.

use nalgebra::{Matrix3, Vector3};
use nil_core::{coframe, coframe_inverse, NilPoint};
use serde::Serialize;

use crate::error::{DevelopError, Result};
use crate::frame::NilFrame;
use crate::patch::{derivative, MetricPatch};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DevelopOptions {
    /// The holonomy defect may reach this multiple of `h²`, with `h` the largest spacing.
    pub defect_factor: f64,
}

impl Default for DevelopOptions {
    fn default() -> Self {
        Self { defect_factor: 10.0 }
    }
}

/// Per-vertex image in Nil with coordinates `(x1, x2, x3)`, for the metric `λ² g_Nil`.
#[derive(Debug, Clone, Serialize)]
pub struct Development {
    pub points: Vec<NilPoint>,
    pub lambda: f64,
    /// Largest disagreement between a tree value and its transport across a non-tree edge.
    pub holonomy_defect: f64,
    pub defect_tolerance: f64,
    /// `max |F*(λ² g_Nil) − g| / max |g|` with `DF` by finite differences of the points.
    pub metric_residual: f64,
}

#[derive(Debug, Clone, Copy)]
struct State {
    /// Columns are the frame vectors in patch coordinates.
    frame: Matrix3<f64>,
    point: Vector3<f64>,
}

/// `g(∇_{Ei} Ej, Ek)` for an orthonormal frame with `[E1, E2] = E3 / λ`, indexed `[k][i][j]`.
fn nil_connection(lambda: f64) -> [[[f64; 3]; 3]; 3] {
    let c = |i: usize, j: usize, k: usize| match (i, j, k) {
        (0, 1, 2) => 1.0 / lambda,
        (1, 0, 2) => -1.0 / lambda,
        _ => 0.0,
    };
    std::array::from_fn(|k| std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (c(i, j, k) - c(j, k, i) + c(k, i, j)))))
}

/// Christoffel matrices `(Γ_a)^m_b = Γ^m_{ab}` at a vertex.
fn christoffel(patch: &MetricPatch, v: usize) -> [Matrix3<f64>; 3] {
    let ginv = patch.values()[v].try_inverse().expect("SPD patch");
    let dg: [Matrix3<f64>; 3] = std::array::from_fn(|a| patch.derivative(v, a));
    std::array::from_fn(|a| {
        let mut low = Matrix3::zeros();
        for k in 0..3 {
            for b in 0..3 {
                low[(k, b)] = 0.5 * (dg[a][(k, b)] + dg[b][(k, a)] - dg[k][(a, b)]);
            }
        }
        ginv * low
    })
}

struct Transport {
    lambda: f64,
    conn: [[[f64; 3]; 3]; 3],
    christoffel: Vec<[Matrix3<f64>; 3]>,
}

impl Transport {
    /// Derivative of the state along axis `a` with Christoffel matrix `gamma` there.
    fn rate(&self, s: &State, a: usize, gamma: &Matrix3<f64>) -> State {
        let coframe_rows = s.frame.try_inverse().expect("frame stays invertible");
        let theta: Vector3<f64> = coframe_rows.column(a).into_owned();
        let omega = Matrix3::from_fn(|k, j| (0..3).map(|i| theta[i] * self.conn[k][i][j]).sum());
        let frame = -gamma * s.frame + s.frame * omega;
        let point = coframe_inverse(s.point[0]) * theta / self.lambda;
        State { frame, point }
    }

    /// Classical Runge–Kutta across the edge from `v` to `w` along axis `a` with step `h`.
    fn step(&self, s: &State, v: usize, w: usize, a: usize, h: f64) -> State {
        let g0 = self.christoffel[v][a];
        let g1 = self.christoffel[w][a];
        let gm = (g0 + g1) * 0.5;
        let add = |s: &State, k: &State, t: f64| State { frame: s.frame + k.frame * t, point: s.point + k.point * t };
        let k1 = self.rate(s, a, &g0);
        let k2 = self.rate(&add(s, &k1, h / 2.0), a, &gm);
        let k3 = self.rate(&add(s, &k2, h / 2.0), a, &gm);
        let k4 = self.rate(&add(s, &k3, h), a, &g1);
        State {
            frame: s.frame + (k1.frame + k2.frame * 2.0 + k3.frame * 2.0 + k4.frame) * (h / 6.0),
            point: s.point + (k1.point + k2.point * 2.0 + k3.point * 2.0 + k4.point) * (h / 6.0),
        }
    }
}

pub fn develop(patch: &MetricPatch, frame: &NilFrame) -> Result<Development> {
    develop_with(patch, frame, &DevelopOptions::default())
}

/// Sends the marked point to the identity and `f_i` to `X_i / λ`, then integrates outwards along
/// a spanning tree: the marked line along axis 0, then axis 1 from it, then axis 2.
pub fn develop_with(patch: &MetricPatch, frame: &NilFrame, opts: &DevelopOptions) -> Result<Development> {
    if !(opts.defect_factor > 0.0) {
        return Err(DevelopError::InvalidPatch(format!("defect factor {}", opts.defect_factor)));
    }
    let transport = Transport {
        lambda: frame.lambda,
        conn: nil_connection(frame.lambda),
        christoffel: (0..patch.num_vertices()).map(|v| christoffel(patch, v)).collect(),
    };
    let mut states: Vec<Option<State>> = vec![None; patch.num_vertices()];
    let start = patch.marked_index();
    states[start] = Some(State { frame: frame.matrix(), point: Vector3::zeros() });
    let mut level = vec![start];
    for a in 0..3 {
        let mut next = Vec::new();
        for &v0 in &level {
            next.push(v0);
            for dir in [1i64, -1] {
                let mut d = [0; 3];
                d[a] = dir;
                let mut v = v0;
                while let Some(w) = patch.shifted(v, d) {
                    let s = states[v].expect("tree parent");
                    states[w] = Some(transport.step(&s, v, w, a, dir as f64 * patch.spacing[a]));
                    next.push(w);
                    v = w;
                }
            }
        }
        level = next;
    }
    let states: Vec<State> = states.into_iter().map(|s| s.expect("tree spans the box")).collect();

    let mut defect = 0.0f64;
    for v in 0..patch.num_vertices() {
        for a in 0..3 {
            let mut d = [0; 3];
            d[a] = 1;
            if let Some(w) = patch.shifted(v, d) {
                let s = transport.step(&states[v], v, w, a, patch.spacing[a]);
                defect = defect.max((s.point - states[w].point).amax()).max((s.frame - states[w].frame).amax());
            }
        }
    }
    let h = patch.spacing.iter().copied().fold(0.0, f64::max);
    let defect_tolerance = opts.defect_factor * h * h;
    if defect > defect_tolerance {
        return Err(DevelopError::HolonomyDefect { defect, tolerance: defect_tolerance });
    }
    let points: Vec<Vector3<f64>> = states.iter().map(|s| s.point).collect();
    let metric_residual = metric_residual(patch, &points, frame.lambda);
    Ok(Development {
        points: points.iter().map(NilPoint::from_vector).collect(),
        lambda: frame.lambda,
        holonomy_defect: defect,
        defect_tolerance,
        metric_residual,
    })
}

/// Pulls `λ² g_Nil` back through finite differences of the developed points.
pub fn metric_residual(patch: &MetricPatch, points: &[Vector3<f64>], lambda: f64) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for v in 0..patch.num_vertices() {
        let df = Matrix3::from_columns(&std::array::from_fn::<_, 3, _>(|a| derivative(|d| patch.shifted(v, d).map(|w| points[w]), a, patch.spacing[a])));
        let j = coframe(points[v][0]);
        let pulled = df.transpose() * j.transpose() * j * df * (lambda * lambda);
        worst = worst.max((pulled - patch.values()[v]).amax());
        scale = scale.max(patch.values()[v].amax());
    }
    worst / scale
}

impl Development {
    /// One row per vertex: grid indices and Nil coordinates.
    pub fn to_csv(&self, patch: &MetricPatch) -> String {
        let mut out = String::from("i,j,l,x1,x2,x3\n");
        for (v, p) in self.points.iter().enumerate() {
            let [i, j, l] = patch.coords(v);
            out.push_str(&format!("{i},{j},{l},{:e},{:e},{:e}\n", p.x1, p.x2, p.x3));
        }
        out
    }
}
