//! Base orbifolds of the Seifert fibration `Nil/Γ -> R²/Γ̄`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};
use crate::lattice::Lattice;
use crate::structure::{LatticeStructure, TranslationData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaseKind {
    Torus,
    SphereWithConePoints,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlatOrbifoldBase {
    pub kind: BaseKind,
    /// Sorted cone orders.
    pub cone_orders: Vec<u32>,
}

const ALLOWED: [&[u32]; 4] = [&[2, 2, 2, 2], &[3, 3, 3], &[2, 4, 4], &[2, 3, 6]];
const TOL: f64 = 1e-7;

impl FlatOrbifoldBase {
    pub fn new(kind: BaseKind, mut cone_orders: Vec<u32>) -> Result<Self> {
        cone_orders.sort_unstable();
        let ok = match kind {
            BaseKind::Torus => cone_orders.is_empty(),
            BaseKind::SphereWithConePoints => ALLOWED.contains(&cone_orders.as_slice()),
        };
        if !ok {
            return Err(LatticeError::UnsupportedPointGroup(format!("{kind:?} with cones {cone_orders:?}")));
        }
        Ok(FlatOrbifoldBase { kind, cone_orders })
    }

    /// `Σ (1 - 1/q)`, equal to 2 for every flat sphere orbifold.
    pub fn cone_defect(&self) -> f64 {
        self.cone_orders.iter().map(|&q| 1.0 - 1.0 / q as f64).sum()
    }

    /// Short name such as `torus` or `S2(2,4,4)`.
    pub fn name(&self) -> String {
        match self.kind {
            BaseKind::Torus => "torus".into(),
            BaseKind::SphereWithConePoints => {
                let c: Vec<String> = self.cone_orders.iter().map(u32::to_string).collect();
                format!("S2({})", c.join(","))
            }
        }
    }
}

/// Classifies the quotient of the plane by the induced planar group.
///
/// Cone points are orbits of rotation centres; each cone order is the order of
/// the stabilizer of the centre in the planar group.
pub fn base_orbifold(lattice: &Lattice, radius: usize) -> Result<FlatOrbifoldBase> {
    let s = LatticeStructure::analyze(lattice, radius)?;
    base_from_structure(&s)
}

pub fn base_from_structure(s: &LatticeStructure) -> Result<FlatOrbifoldBase> {
    let planar: Vec<(Matrix2<f64>, Vector2<f64>)> = s
        .cosets
        .iter()
        .map(|(g, _)| {
            let p = g.induced_planar();
            (p.linear, p.offset)
        })
        .collect();
    if planar.iter().any(|(a, _)| a.determinant() < 0.0) {
        return Err(LatticeError::UnsupportedPointGroup("orientation-reversing planar element".into()));
    }
    if planar.len() == 1 {
        return FlatOrbifoldBase::new(BaseKind::Torus, vec![]);
    }
    let t = &s.translations;
    let u = Matrix2::new(t.u1[0], t.u2[0], t.u1[1], t.u2[1]);
    // Rotation centres modulo the translation lattice.
    let mut centres: Vec<[f64; 2]> = Vec::new();
    for (a, off) in planar.iter().skip(1) {
        let inv = (Matrix2::identity() - a)
            .try_inverse()
            .ok_or_else(|| LatticeError::UnsupportedPointGroup("non-rotation element".into()))?;
        for n1 in -3..=3 {
            for n2 in -3..=3 {
                let shift = u * Vector2::new(n1 as f64, n2 as f64);
                let c = inv * (a * shift + off);
                let r = reduce(t, [c[0], c[1]]);
                if !centres.iter().any(|x| same_mod(t, *x, r)) {
                    centres.push(r);
                }
            }
        }
    }
    let stabilizer = |c: [f64; 2]| {
        planar
            .iter()
            .filter(|(a, off)| {
                let v = Vector2::new(c[0], c[1]);
                let image = a * v + off;
                same_mod(t, [image[0], image[1]], c)
            })
            .count() as u32
    };
    let mut seen = vec![false; centres.len()];
    let mut cones = Vec::new();
    for i in 0..centres.len() {
        if seen[i] {
            continue;
        }
        let q = stabilizer(centres[i]);
        for (a, off) in &planar {
            let image = a * Vector2::new(centres[i][0], centres[i][1]) + off;
            for (j, c) in centres.iter().enumerate() {
                if same_mod(t, [image[0], image[1]], *c) {
                    seen[j] = true;
                }
            }
        }
        if q >= 2 {
            cones.push(q);
        }
    }
    let base = FlatOrbifoldBase::new(BaseKind::SphereWithConePoints, cones)?;
    debug_assert!((base.cone_defect() - 2.0).abs() < 1e-12);
    Ok(base)
}

fn reduce(t: &TranslationData, x: [f64; 2]) -> [f64; 2] {
    let c = t.coordinates(x);
    let f = [c[0] - c[0].floor(), c[1] - c[1].floor()];
    [f[0] * t.u1[0] + f[1] * t.u2[0], f[0] * t.u1[1] + f[1] * t.u2[1]]
}

fn same_mod(t: &TranslationData, x: [f64; 2], y: [f64; 2]) -> bool {
    let c = t.coordinates([x[0] - y[0], x[1] - y[1]]);
    (c[0] - c[0].round()).abs() < TOL && (c[1] - c[1].round()).abs() < TOL
}

/// Non-Haken iff the base is a sphere with exactly three cone points.
pub fn is_non_haken(lattice: &Lattice, radius: usize) -> Result<bool> {
    Ok(base_orbifold(lattice, radius)?.cone_orders.len() == 3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_flat_cone_data_is_accepted() {
        assert!(FlatOrbifoldBase::new(BaseKind::SphereWithConePoints, vec![4, 2, 4]).is_ok());
        assert!(FlatOrbifoldBase::new(BaseKind::SphereWithConePoints, vec![2, 3, 7]).is_err());
        assert!(FlatOrbifoldBase::new(BaseKind::Torus, vec![2]).is_err());
        let b = FlatOrbifoldBase::new(BaseKind::SphereWithConePoints, vec![6, 3, 2]).unwrap();
        assert_eq!(b.name(), "S2(2,3,6)");
        assert!((b.cone_defect() - 2.0).abs() < 1e-15);
    }
}
