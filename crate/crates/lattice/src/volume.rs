//! Quotient volumes, unit-volume normalization and conjugacy checks.

use nil_core::{LeftInvariantMetric, NilAffineMap};
use serde::Serialize;

use crate::error::{LatticeError, Result};
use crate::lattice::Lattice;
use crate::structure::LatticeStructure;

/// `covol(planar lattice) · central period · √det G / index`.
pub fn quotient_volume(lattice: &Lattice, g: &LeftInvariantMetric, radius: usize) -> Result<f64> {
    let s = LatticeStructure::analyze(lattice, radius)?;
    Ok(volume_from_structure(&s, g))
}

pub fn volume_from_structure(s: &LatticeStructure, g: &LeftInvariantMetric) -> f64 {
    let t = &s.translations;
    t.planar_covolume() * t.central_period * g.volume_density() / s.index() as f64
}

#[derive(Debug, Clone)]
pub struct UnitVolume {
    /// The conjugated lattice `δ Γ δ⁻¹`.
    pub lattice: Lattice,
    /// The metric, unchanged: the conjugated quotient has unit volume for it.
    pub metric: LeftInvariantMetric,
    /// Carnot factor of `δ`.
    pub dilation: f64,
}

/// Conjugates by the Carnot dilation `δ_μ` with `μ⁴ · vol = 1`.
pub fn normalize_unit_volume(lattice: &Lattice, g: &LeftInvariantMetric, radius: usize) -> Result<UnitVolume> {
    let vol = quotient_volume(lattice, g, radius)?;
    let mu = vol.powf(-0.25);
    let lattice = if (mu - 1.0).abs() < 1e-15 { lattice.clone() } else { lattice.dilated(mu)? };
    Ok(UnitVolume { lattice, metric: *g, dilation: mu })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjugacyReport {
    pub conjugate: bool,
    /// First generator word that failed, prefixed by the side it came from.
    pub failure: Option<String>,
    /// Conformal factor of the planar part of `DΦ`.
    pub lambda: f64,
    /// Whether the planar part is conformal.
    pub conformal: bool,
    pub det: f64,
    /// `vol(Nil/Γ₂) / vol(Nil/Γ₁)` for `g_Nil`.
    pub volume_ratio: f64,
    pub equal_volumes: bool,
    /// True when equal volumes together with conformality force `λ = 1`.
    pub isometric: bool,
}

/// Verifies `Φ Γ₁ Φ⁻¹ = Γ₂` on generators and on the word ball of `Γ₁`.
pub fn check_conjugacy(g1: &Lattice, g2: &Lattice, phi: &NilAffineMap, radius: usize) -> Result<ConjugacyReport> {
    let s1 = LatticeStructure::analyze(g1, radius)?;
    let s2 = LatticeStructure::analyze(g2, radius)?;
    let a = phi.linear_part().planar();
    let det_a = a.determinant();
    if det_a == 0.0 {
        return Err(LatticeError::InvalidArgument("singular conjugating map".into()));
    }
    let lambda = det_a.abs().sqrt();
    let conformal = ((a.transpose() * a) / lambda.powi(2) - nalgebra::Matrix2::identity()).amax() < 1e-9;
    let det = phi.linear_part().determinant();

    let mut failure = None;
    for (i, g) in g1.generators().iter().enumerate() {
        let image = phi.conjugate(g);
        if failure.is_none() && !(image.is_isometry(1e-9) && s2.contains(&image)) {
            failure = Some(format!("Γ1:g{}", i + 1));
        }
    }
    let inv = phi.inverse();
    for (i, h) in g2.generators().iter().enumerate() {
        let image = inv.conjugate(h);
        if failure.is_none() && !(image.is_isometry(1e-9) && s1.contains(&image)) {
            failure = Some(format!("Γ2:g{}", i + 1));
        }
    }
    if failure.is_none() {
        for e in g1.word_ball(radius.min(4)).elements {
            if !s2.contains(&phi.conjugate(&e.map)) {
                failure = Some(format!("Γ1:{}", e.word));
                break;
            }
        }
    }
    let standard = LeftInvariantMetric::standard();
    let volume_ratio = volume_from_structure(&s2, &standard) / volume_from_structure(&s1, &standard);
    let equal_volumes = (volume_ratio - 1.0).abs() < 1e-9;
    Ok(ConjugacyReport {
        conjugate: failure.is_none(),
        failure,
        lambda,
        conformal,
        det,
        volume_ratio,
        equal_volumes,
        isometric: equal_volumes && conformal && (lambda - 1.0).abs() < 1e-9,
    })
}
