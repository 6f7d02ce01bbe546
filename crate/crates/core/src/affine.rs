//! The affine group `Aff(Nil)`: left translations composed with automorphisms.

use nalgebra::{Matrix2, Matrix3, Vector2};
use serde::{Deserialize, Serialize};

use crate::automorphism::NilAutomorphism;
use crate::group::NilPoint;
use crate::metric::LeftInvariantMetric;

/// `p -> translation * auto(p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NilAffineMap {
    pub translation: NilPoint,
    #[serde(rename = "automorphism")]
    pub auto: NilAutomorphism,
}

/// An affine map `x -> linear x + offset` of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarAffine {
    pub linear: Matrix2<f64>,
    pub offset: Vector2<f64>,
}

impl PlanarAffine {
    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        let y = self.linear * Vector2::new(x[0], x[1]) + self.offset;
        [y[0], y[1]]
    }

    pub fn compose(&self, other: &PlanarAffine) -> PlanarAffine {
        PlanarAffine { linear: self.linear * other.linear, offset: self.linear * other.offset + self.offset }
    }

    /// Fixed point of the map, if the linear part has no eigenvalue 1.
    pub fn fixed_point(&self) -> Option<[f64; 2]> {
        let m = Matrix2::identity() - self.linear;
        let inv = m.try_inverse()?;
        let x = inv * self.offset;
        Some([x[0], x[1]])
    }
}

impl NilAffineMap {
    pub const IDENTITY: NilAffineMap = NilAffineMap { translation: NilPoint::IDENTITY, auto: NilAutomorphism::IDENTITY };

    pub fn new(translation: NilPoint, auto: NilAutomorphism) -> Self {
        Self { translation, auto }
    }

    pub fn translation(t: NilPoint) -> Self {
        Self { translation: t, auto: NilAutomorphism::IDENTITY }
    }

    pub fn automorphism(auto: NilAutomorphism) -> Self {
        Self { translation: NilPoint::IDENTITY, auto }
    }

    pub fn apply(&self, p: &NilPoint) -> NilPoint {
        self.translation.mul(&self.auto.apply_point(p))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &NilAffineMap) -> NilAffineMap {
        NilAffineMap {
            translation: self.translation.mul(&self.auto.apply_point(&other.translation)),
            auto: self.auto.compose(&other.auto),
        }
    }

    pub fn inverse(&self) -> NilAffineMap {
        let inv = self.auto.inverse();
        NilAffineMap { translation: inv.apply_point(&self.translation.inv()), auto: inv }
    }

    /// Conjugate `self * g * self^-1`.
    pub fn conjugate(&self, g: &NilAffineMap) -> NilAffineMap {
        self.compose(g).compose(&self.inverse())
    }

    pub fn is_isometry(&self, tol: f64) -> bool {
        self.auto.is_isometric(tol)
    }

    pub fn is_translation(&self, tol: f64) -> bool {
        (self.auto.matrix() - Matrix3::identity()).amax() <= tol
    }

    /// The Lie algebra automorphism `DΦ`.
    pub fn linear_part(&self) -> &NilAutomorphism {
        &self.auto
    }

    /// Coordinate Jacobian of the map at `p`.
    pub fn jacobian(&self, p: &NilPoint) -> Matrix3<f64> {
        self.translation.left_translation_jacobian() * self.auto.point_jacobian(p)
    }

    /// The induced affine map of the plane making the abelianization equivariant.
    pub fn induced_planar(&self) -> PlanarAffine {
        PlanarAffine {
            linear: self.auto.planar(),
            offset: Vector2::new(self.translation.x1, self.translation.x2),
        }
    }

    /// Pushforward `(D^-1)^T G D^-1` of a left-invariant metric.
    pub fn push_metric(&self, g: &LeftInvariantMetric) -> LeftInvariantMetric {
        g.push_forward(&self.auto)
    }

    /// Pullback `D^T G D`.
    pub fn pull_metric(&self, g: &LeftInvariantMetric) -> LeftInvariantMetric {
        g.pull_back(&self.auto)
    }

    pub fn max_abs_diff(&self, other: &NilAffineMap) -> f64 {
        self.translation
            .max_abs_diff(&other.translation)
            .max((self.auto.matrix() - other.auto.matrix()).amax())
    }
}

pub fn abelianize(p: &NilPoint) -> [f64; 2] {
    p.abelianize()
}
