//! Coordinate metrics sampled on a box.

use nalgebra::Matrix3;
use nil_core::check_spd;
use nil_rounding::{jet_from_samples, Jet};
use serde::{Deserialize, Serialize};

use crate::error::{DevelopError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    Positive,
    Negative,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Positive => 1.0,
            Orientation::Negative => -1.0,
        }
    }
}

/// A metric on the grid `origin + (i h1, j h2, l h3)`, `0 ≤ i < n1` and so on, with a marked vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricPatch {
    pub origin: [f64; 3],
    pub spacing: [f64; 3],
    pub n: [usize; 3],
    pub marked: [usize; 3],
    pub orientation: Orientation,
    values: Vec<Matrix3<f64>>,
}

/// Vertices the marked point must keep from the boundary, for second differences of frames.
pub const MARGIN: usize = 2;

impl MetricPatch {
    pub fn new(origin: [f64; 3], spacing: [f64; 3], n: [usize; 3], marked: [usize; 3], orientation: Orientation, values: Vec<Matrix3<f64>>) -> Result<Self> {
        if n.iter().any(|&k| k < 2 * MARGIN + 1) {
            return Err(DevelopError::InvalidPatch(format!("need at least {} vertices per axis, got {n:?}", 2 * MARGIN + 1)));
        }
        if spacing.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(DevelopError::InvalidPatch(format!("spacing {spacing:?}")));
        }
        if (0..3).any(|a| marked[a] < MARGIN || marked[a] + MARGIN >= n[a]) {
            return Err(DevelopError::InvalidPatch(format!("marked vertex {marked:?} is within {MARGIN} of the boundary")));
        }
        if values.len() != n[0] * n[1] * n[2] {
            return Err(DevelopError::InvalidPatch(format!("{} values for {n:?}", values.len())));
        }
        for (v, g) in values.iter().enumerate() {
            check_spd(g).map_err(|e| DevelopError::InvalidPatch(format!("vertex {v}: {e}")))?;
        }
        Ok(Self { origin, spacing, n, marked, orientation, values })
    }

    /// Samples `g` at every grid point.
    pub fn from_fn(origin: [f64; 3], spacing: [f64; 3], n: [usize; 3], marked: [usize; 3], orientation: Orientation, g: impl Fn([f64; 3]) -> Matrix3<f64>) -> Result<Self> {
        let values = (0..n[0] * n[1] * n[2])
            .map(|v| {
                let c = coords(n, v);
                g(std::array::from_fn(|a| origin[a] + c[a] as f64 * spacing[a]))
            })
            .collect();
        Self::new(origin, spacing, n, marked, orientation, values)
    }

    pub fn num_vertices(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[Matrix3<f64>] {
        &self.values
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.n[1] + c[1]) * self.n[2] + c[2]
    }

    pub fn coords(&self, v: usize) -> [usize; 3] {
        coords(self.n, v)
    }

    pub fn point(&self, v: usize) -> [f64; 3] {
        let c = self.coords(v);
        std::array::from_fn(|a| self.origin[a] + c[a] as f64 * self.spacing[a])
    }

    pub fn marked_index(&self) -> usize {
        self.index(self.marked)
    }

    /// Vertex at an offset, if inside the box.
    pub fn shifted(&self, v: usize, d: [i64; 3]) -> Option<usize> {
        let c = self.coords(v);
        let mut out = [0; 3];
        for a in 0..3 {
            let x = c[a] as i64 + d[a];
            if x < 0 || x >= self.n[a] as i64 {
                return None;
            }
            out[a] = x as usize;
        }
        Some(self.index(out))
    }

    /// True if all 26 neighbours exist.
    pub fn is_interior(&self, v: usize) -> bool {
        let c = self.coords(v);
        (0..3).all(|a| c[a] >= 1 && c[a] + 1 < self.n[a])
    }

    /// Central-difference jet at an interior vertex.
    pub fn jet(&self, v: usize) -> Jet {
        debug_assert!(self.is_interior(v));
        jet_from_samples(|d| self.values[self.shifted(v, d).expect("interior vertex")], self.spacing)
    }

    /// `∂_a g` at any vertex, second order, one-sided at the boundary.
    pub fn derivative(&self, v: usize, a: usize) -> Matrix3<f64> {
        derivative(|d| self.shifted(v, d).map(|w| self.values[w]), a, self.spacing[a])
    }
}

fn coords(n: [usize; 3], v: usize) -> [usize; 3] {
    [v / (n[1] * n[2]), (v / n[2]) % n[1], v % n[2]]
}

/// Second-order first derivative along axis `a` from samples that may be missing past a boundary.
pub(crate) fn derivative<T>(sample: impl Fn([i64; 3]) -> Option<T>, a: usize, h: f64) -> T
where
    T: std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T> + std::ops::Add<Output = T> + Copy,
{
    let at = |s: i64| {
        let mut d = [0; 3];
        d[a] = s;
        sample(d)
    };
    match (at(-1), at(1)) {
        (Some(m), Some(p)) => (p - m) * (0.5 / h),
        (None, Some(p)) => {
            let c = at(0).expect("vertex itself");
            (p * 4.0 - c * 3.0 - at(2).expect("three vertices per axis")) * (0.5 / h)
        }
        (Some(m), None) => {
            let c = at(0).expect("vertex itself");
            (c * 3.0 - m * 4.0 + at(-2).expect("three vertices per axis")) * (0.5 / h)
        }
        (None, None) => unreachable!("axes have at least three vertices"),
    }
}
