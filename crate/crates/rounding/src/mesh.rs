//! Grid over a fundamental domain of `Γ_k \ Nil` with twisted identifications.
//!
//! Vertices are `(i, j, l)` with `x = (i h1, j h2, l h3)`, `h = (1/n1, 1/n2, 1/(k n3))`.
//! The generators act on unwrapped indices by
//!
//! ```text
//! A: (i, j, l) -> (i + n1, j, l + j m)     m = k n3 / n2
//! B: (i, j, l) -> (i, j + n2, l)
//! Z: (i, j, l) -> (i, j, l + n3)
//! ```
//!
//! with `[A, B] = Z^k`. Edges leaving a vertex are always coordinate aligned in the
//! chart of that vertex. A base plaquette at `i = n1 - 1` does not close up, so its
//! horizontal face carries `m` extra vertical edges; every other cell is a cube.

use nil_core::NilPoint;
use nil_lattice::{Lattice, LatticeStructure};

use crate::error::{Result, RoundingError};

pub const MIN_RESOLUTION: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct MeshedNilmanifold {
    label: String,
    k: usize,
    n: [usize; 3],
    m: usize,
    h: [f64; 3],
}

/// A vertex reached from an unwrapped index: its storage index and the deck element `B^q2 A^q1 Z^q3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reduced {
    pub vertex: usize,
    pub q1: i64,
    pub q2: i64,
}

/// Builds the mesh of `Γ\Nil` for `Γ = Γ_k` in its standard presentation.
pub fn build_mesh(lattice: &Lattice, n: [usize; 3]) -> Result<MeshedNilmanifold> {
    let k = standard_twist(lattice)?;
    let mesh = MeshedNilmanifold::new(lattice.label.clone(), k, n)?;
    mesh.verify_identifications(lattice)?;
    Ok(mesh)
}

fn standard_twist(lattice: &Lattice) -> Result<usize> {
    let s = LatticeStructure::analyze(lattice, 4)?;
    if s.index() != 1 {
        return Err(RoundingError::UnsupportedLattice(format!(
            "{} has a point group of order {}; only translation lattices are meshed",
            lattice.label,
            s.index()
        )));
    }
    let t = &s.translations;
    let standard = |u: [f64; 2], e: [f64; 2]| (u[0] - e[0]).abs() < 1e-9 && (u[1] - e[1]).abs() < 1e-9;
    let lifts_flat = t.t1.x3.abs() < 1e-9 && t.t2.x3.abs() < 1e-9;
    if !standard(t.u1, [1.0, 0.0]) || !standard(t.u2, [0.0, 1.0]) || !lifts_flat {
        return Err(RoundingError::UnsupportedLattice(format!(
            "{} is not in the standard form <exp X1, exp X2, exp(X3/k)>",
            lattice.label
        )));
    }
    let k = 1.0 / t.central_period;
    if (k - k.round()).abs() > 1e-9 || k.round() < 1.0 {
        return Err(RoundingError::UnsupportedLattice(format!("central period {} is not 1/k", t.central_period)));
    }
    Ok(k.round() as usize)
}

impl MeshedNilmanifold {
    pub fn new(label: impl Into<String>, k: usize, n: [usize; 3]) -> Result<Self> {
        if n.iter().any(|&x| x < MIN_RESOLUTION) {
            return Err(RoundingError::Resolution(n, format!("at least {MIN_RESOLUTION} per axis required")));
        }
        if k == 0 {
            return Err(RoundingError::InvalidArgument("k must be positive".into()));
        }
        if (k * n[2]) % n[1] != 0 {
            return Err(RoundingError::Resolution(n, "k n3 must be divisible by n2".into()));
        }
        let m = k * n[2] / n[1];
        let h = [1.0 / n[0] as f64, 1.0 / n[1] as f64, 1.0 / (k * n[2]) as f64];
        Ok(Self { label: label.into(), k, n, m, h })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.n
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.h
    }

    /// Fibre shift per row at the `x1` seam.
    pub fn seam_shift(&self) -> usize {
        self.m
    }

    pub fn num_vertices(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn num_edges(&self) -> usize {
        3 * self.num_vertices()
    }

    pub fn num_faces(&self) -> usize {
        3 * self.num_vertices()
    }

    pub fn num_cells(&self) -> usize {
        self.num_vertices()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_faces() as i64 - self.num_cells() as i64
    }

    /// Volume of one grid cell in coordinates.
    pub fn cell_volume(&self) -> f64 {
        self.h[0] * self.h[1] * self.h[2]
    }

    pub fn index(&self, i: usize, j: usize, l: usize) -> usize {
        (i * self.n[1] + j) * self.n[2] + l
    }

    pub fn coords(&self, v: usize) -> [usize; 3] {
        let l = v % self.n[2];
        let ij = v / self.n[2];
        [ij / self.n[1], ij % self.n[1], l]
    }

    /// Coordinates of a vertex in the fundamental domain.
    pub fn position(&self, v: usize) -> [f64; 3] {
        let [i, j, l] = self.coords(v);
        [i as f64 * self.h[0], j as f64 * self.h[1], l as f64 * self.h[2]]
    }

    /// Reduces an unwrapped index to the fundamental domain.
    pub fn reduce(&self, i: i64, j: i64, l: i64) -> Reduced {
        let [n1, n2, n3] = self.n.map(|x| x as i64);
        let q2 = j.div_euclid(n2);
        let j0 = j - q2 * n2;
        let q1 = i.div_euclid(n1);
        let i0 = i - q1 * n1;
        let l0 = (l - q1 * j0 * self.m as i64).rem_euclid(n3);
        Reduced { vertex: self.index(i0 as usize, j0 as usize, l0 as usize), q1, q2 }
    }

    /// Vertex reached from `v` by the integer offset `d`.
    pub fn offset(&self, v: usize, d: [i64; 3]) -> Reduced {
        let [i, j, l] = self.coords(v);
        self.reduce(i as i64 + d[0], j as i64 + d[1], l as i64 + d[2])
    }

    pub fn neighbor(&self, v: usize, axis: usize) -> usize {
        let mut d = [0; 3];
        d[axis] = 1;
        self.offset(v, d).vertex
    }

    pub fn back_neighbor(&self, v: usize, axis: usize) -> usize {
        let mut d = [0; 3];
        d[axis] = -1;
        self.offset(v, d).vertex
    }

    /// First coordinate of the unwrapped point `v + d`, in the chart of `v`.
    pub fn lifted_x1(&self, v: usize, d: [i64; 3]) -> f64 {
        (self.coords(v)[0] as i64 + d[0]) as f64 * self.h[0]
    }

    /// Vertical edges closing the horizontal face at `v`, each traversed downwards.
    pub fn seam_chain(&self, v: usize) -> Vec<usize> {
        let [i, _, _] = self.coords(v);
        if i + 1 != self.n[0] {
            return Vec::new();
        }
        let top = self.neighbor(self.neighbor(v, 0), 1);
        (1..=self.m as i64).map(|s| self.offset(top, [0, 0, -s]).vertex).collect()
    }

    /// `d0`: vertex values to edge differences, edge `3v + a` leaving `v` along axis `a`.
    pub fn d0(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_edges()];
        for v in 0..self.num_vertices() {
            for a in 0..3 {
                out[3 * v + a] = f[self.neighbor(v, a)] - f[v];
            }
        }
        out
    }

    pub fn d0_transpose(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vertices()];
        for v in 0..self.num_vertices() {
            let mut s = 0.0;
            for a in 0..3 {
                s += x[3 * self.back_neighbor(v, a) + a] - x[3 * v + a];
            }
            out[v] = s;
        }
        out
    }

    /// Signed edges bounding face `3v + c`, where `c` is the normal axis.
    pub fn face_boundary(&self, v: usize, c: usize) -> Vec<(usize, f64)> {
        let (a, b) = match c {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        let mut out = vec![
            (3 * v + a, 1.0),
            (3 * self.neighbor(v, a) + b, 1.0),
            (3 * self.neighbor(v, b) + a, -1.0),
            (3 * v + b, -1.0),
        ];
        if c == 2 {
            out.extend(self.seam_chain(v).into_iter().map(|w| (3 * w + 2, -1.0)));
        }
        out
    }

    /// `d1`: edge values to face circulations.
    pub fn d1(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_faces()];
        for v in 0..self.num_vertices() {
            for c in 0..3 {
                out[3 * v + c] = self.face_boundary(v, c).into_iter().map(|(e, s)| s * x[e]).sum();
            }
        }
        out
    }

    pub fn d1_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_edges()];
        for v in 0..self.num_vertices() {
            for c in 0..3 {
                let w = y[3 * v + c];
                for (e, s) in self.face_boundary(v, c) {
                    out[e] += s * w;
                }
            }
        }
        out
    }

    /// Signed faces bounding cell `v`.
    pub fn cell_boundary(&self, v: usize) -> [(usize, f64); 6] {
        [
            (3 * self.neighbor(v, 0), 1.0),
            (3 * v, -1.0),
            (3 * self.neighbor(v, 1) + 1, -1.0),
            (3 * v + 1, 1.0),
            (3 * self.neighbor(v, 2) + 2, 1.0),
            (3 * v + 2, -1.0),
        ]
    }

    /// `d2`: face values to cell fluxes.
    pub fn d2(&self, y: &[f64]) -> Vec<f64> {
        (0..self.num_cells()).map(|v| self.cell_boundary(v).iter().map(|&(f, s)| s * y[f]).sum()).collect()
    }

    /// Checks the index-space deck maps against the group law on the lattice generators.
    pub fn verify_identifications(&self, lattice: &Lattice) -> Result<()> {
        let [n1, n2, n3] = self.n.map(|x| x as i64);
        let m = self.m as i64;
        let a = |p: [i64; 3]| [p[0] + n1, p[1], p[2] + p[1] * m];
        let b = |p: [i64; 3]| [p[0], p[1] + n2, p[2]];
        let a_inv = |p: [i64; 3]| [p[0] - n1, p[1], p[2] - p[1] * m];
        let b_inv = |p: [i64; 3]| [p[0], p[1] - n2, p[2]];
        for p in [[0, 0, 0], [1, 2, 3], [-5, 7, 11], [3, -4, -2]] {
            let c = a(b(a_inv(b_inv(p))));
            if c != [p[0], p[1], p[2] + self.k as i64 * n3] {
                return Err(RoundingError::UnsupportedLattice("index commutator is not Z^k".into()));
            }
        }
        let gens = lattice.generators();
        let point = |p: [i64; 3]| NilPoint::new(p[0] as f64 * self.h[0], p[1] as f64 * self.h[1], p[2] as f64 * self.h[2]);
        let images: [fn(&Self, [i64; 3]) -> [i64; 3]; 3] = [
            |s, p| [p[0] + s.n[0] as i64, p[1], p[2] + p[1] * s.m as i64],
            |s, p| [p[0], p[1] + s.n[1] as i64, p[2]],
            |s, p| [p[0], p[1], p[2] + s.n[2] as i64],
        ];
        for (g, image) in gens.iter().zip(images) {
            for p in [[0, 0, 0], [1, 2, 3], [n1 - 1, n2 - 1, n3 - 1], [2, n2 - 1, 1]] {
                let moved = g.apply(&point(p));
                if moved.max_abs_diff(&point(image(self, p))) > 1e-12 {
                    return Err(RoundingError::UnsupportedLattice("generator action does not preserve the grid".into()));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nil_lattice::gamma;

    #[test]
    fn reduce_is_consistent_with_deck_maps() {
        let mesh = MeshedNilmanifold::new("t", 2, [4, 4, 4]).unwrap();
        let m = mesh.seam_shift() as i64;
        for &(i, j, l) in &[(0i64, 0i64, 0i64), (1, 2, 3), (3, 3, 1)] {
            let v = mesh.reduce(i, j, l).vertex;
            assert_eq!(mesh.reduce(i + 4, j, l + j * m).vertex, v);
            assert_eq!(mesh.reduce(i, j + 4, l).vertex, v);
            assert_eq!(mesh.reduce(i, j, l + 4).vertex, v);
            assert_eq!(mesh.reduce(i - 4, j, l - j * m).vertex, v);
        }
    }

    #[test]
    fn rejects_small_and_incompatible_resolutions() {
        assert!(MeshedNilmanifold::new("t", 1, [3, 8, 8]).is_err());
        assert!(MeshedNilmanifold::new("t", 1, [8, 8, 4]).is_err());
        assert!(build_mesh(&gamma(1), [8, 8, 8]).is_ok());
    }

    #[test]
    fn seam_faces_carry_k_vertical_edges() {
        let mesh = build_mesh(&gamma(3), [4, 4, 4]).unwrap();
        assert_eq!(mesh.face_boundary(mesh.index(3, 1, 0), 2).len(), 4 + 3);
        assert_eq!(mesh.face_boundary(mesh.index(2, 1, 0), 2).len(), 4);
    }
}
