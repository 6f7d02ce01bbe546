//! The shipped lattice catalog and its JSON form.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use nil_core::{NilAffineMap, NilAutomorphism, NilPoint};

use crate::error::Result;
use crate::lattice::{planar_lift, Lattice};

/// `Γ_k = ⟨exp X1, exp X2, exp(X3 / k)⟩`, with `[a, b] = z^k`.
pub fn gamma(k: u32) -> Lattice {
    assert!(k >= 1, "k must be positive");
    translation_lattice(format!("Gamma{k}"), [1.0, 0.0], [0.0, 1.0], 1.0 / k as f64)
}

fn translation_lattice(label: String, u1: [f64; 2], u2: [f64; 2], w: f64) -> Lattice {
    let gens = vec![
        NilAffineMap::translation(planar_lift(u1)),
        NilAffineMap::translation(planar_lift(u2)),
        NilAffineMap::translation(NilPoint::central(w)),
    ];
    Lattice::new(label, gens).expect("translations are isometries")
}

fn rotation(n: u32) -> Matrix2<f64> {
    let t = 2.0 * PI / n as f64;
    Matrix2::new(t.cos(), -t.sin(), t.sin(), t.cos())
}

/// Extension of a translation lattice by the screw motion `z^s ∘ R_{2π/n}`.
///
/// The square lattice carries ℤ2 and ℤ4, the hexagonal lattice ℤ3 and ℤ6. The
/// central periods and screw offsets are chosen so that the action is free.
pub fn point_group_extension(n: u32) -> Lattice {
    let (u1, u2, w, s) = match n {
        2 => ([1.0, 0.0], [0.0, 1.0], 0.5, 0.25),
        4 => ([1.0, 0.0], [0.0, 1.0], 0.5, 0.125),
        3 | 6 => {
            let r = rotation(3) * nalgebra::Vector2::new(1.0, 0.0);
            let w = 3f64.sqrt() / 12.0;
            ([1.0, 0.0], [r[0], r[1]], w, if n == 3 { w / 3.0 } else { w / 6.0 })
        }
        _ => panic!("no shipped extension for point group of order {n}"),
    };
    let base = translation_lattice(format!("Z{n}"), u1, u2, w);
    let rho = NilAffineMap::new(
        NilPoint::central(s),
        NilAutomorphism::block(rotation(n)).expect("rotation is invertible"),
    );
    let mut gens = base.generators().to_vec();
    gens.push(rho);
    Lattice::new(format!("Z{n}"), gens).expect("screw motions are isometries")
}

/// `Γ_1..Γ_4` followed by the ℤ2, ℤ3, ℤ4, ℤ6 extensions.
pub fn default_catalog() -> Vec<Lattice> {
    (1..=4).map(gamma).chain([2, 3, 4, 6].map(point_group_extension)).collect()
}

pub fn catalog_to_json(lattices: &[Lattice]) -> Result<String> {
    Ok(serde_json::to_string_pretty(lattices)?)
}

pub fn catalog_from_json(s: &str) -> Result<Vec<Lattice>> {
    Ok(serde_json::from_str(s)?)
}
