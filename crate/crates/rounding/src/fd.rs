//! Second-order finite-difference jets of a metric field.

use nalgebra::Matrix3;
use rayon::prelude::*;

use crate::field::to_coordinate;
use crate::mesh::MeshedNilmanifold;

/// Coordinate metric with its first and second derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub g: Matrix3<f64>,
    /// `dg[a] = ∂_a g`.
    pub dg: [Matrix3<f64>; 3],
    /// `ddg[a][b] = ∂_a ∂_b g`, symmetric in `a, b`.
    pub ddg: [[Matrix3<f64>; 3]; 3],
}

/// Central differences from samples at integer offsets, with spacing `h`.
///
/// Diagonal second derivatives use the three-point rule, mixed ones the four-corner rule.
pub fn jet_from_samples(sample: impl Fn([i64; 3]) -> Matrix3<f64>, h: [f64; 3]) -> Jet {
    let unit = |a: usize, s: i64| {
        let mut d = [0; 3];
        d[a] = s;
        d
    };
    let g = sample([0, 0, 0]);
    let plus: [Matrix3<f64>; 3] = std::array::from_fn(|a| sample(unit(a, 1)));
    let minus: [Matrix3<f64>; 3] = std::array::from_fn(|a| sample(unit(a, -1)));
    let dg = std::array::from_fn(|a| (plus[a] - minus[a]) / (2.0 * h[a]));
    let mut ddg = [[Matrix3::zeros(); 3]; 3];
    for a in 0..3 {
        ddg[a][a] = (plus[a] - g * 2.0 + minus[a]) / (h[a] * h[a]);
        for b in a + 1..3 {
            let corner = |sa: i64, sb: i64| {
                let mut d = [0; 3];
                d[a] = sa;
                d[b] = sb;
                sample(d)
            };
            let m = (corner(1, 1) - corner(1, -1) - corner(-1, 1) + corner(-1, -1)) / (4.0 * h[a] * h[b]);
            ddg[a][b] = m;
            ddg[b][a] = m;
        }
    }
    Jet { g, dg, ddg }
}

/// Jet at vertex `v` in its own chart, from left-invariant-frame values.
pub fn mesh_jet(mesh: &MeshedNilmanifold, frame: &[Matrix3<f64>], v: usize) -> Jet {
    jet_from_samples(|d| to_coordinate(&frame[mesh.offset(v, d).vertex], mesh.lifted_x1(v, d)), mesh.spacing())
}

pub fn mesh_jets(mesh: &MeshedNilmanifold, frame: &[Matrix3<f64>]) -> Vec<Jet> {
    (0..mesh.num_vertices()).into_par_iter().map(|v| mesh_jet(mesh, frame, v)).collect()
}

/// Covector of a 1-cochain at `v` by central averaging of the edges on both sides.
pub fn vertex_covector(mesh: &MeshedNilmanifold, x: &[f64], v: usize) -> [f64; 3] {
    let h = mesh.spacing();
    std::array::from_fn(|a| (x[3 * v + a] + x[3 * mesh.back_neighbor(v, a) + a]) / (2.0 * h[a]))
}
