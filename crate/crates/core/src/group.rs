//! The Heisenberg group in upper-triangular matrix coordinates and its Lie algebra.
//!
//! A point `(x1, x2, x3)` stands for the matrix
//!
//! ```text
//! | 1 x1 x3 |
//! | 0  1 x2 |
//! | 0  0  1 |
//! ```
//!
//! and a Lie algebra vector `(a1, a2, a3)` for `a1 X1 + a2 X2 + a3 X3` with
//! `X1 = E12`, `X2 = E23`, `X3 = E13`.

use std::ops::{Add, Neg, Sub};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NilPoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl NilPoint {
    pub const IDENTITY: NilPoint = NilPoint { x1: 0.0, x2: 0.0, x3: 0.0 };

    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    /// Central element `exp(t X3)`.
    pub const fn central(t: f64) -> Self {
        Self::new(0.0, 0.0, t)
    }

    pub fn mul(&self, q: &NilPoint) -> NilPoint {
        NilPoint::new(self.x1 + q.x1, self.x2 + q.x2, self.x3 + q.x3 + self.x1 * q.x2)
    }

    pub fn inv(&self) -> NilPoint {
        NilPoint::new(-self.x1, -self.x2, -self.x3 + self.x1 * self.x2)
    }

    pub fn log(&self) -> LieVec {
        LieVec::new(self.x1, self.x2, self.x3 - 0.5 * self.x1 * self.x2)
    }

    /// Group commutator `p q p^-1 q^-1`.
    pub fn commutator(&self, q: &NilPoint) -> NilPoint {
        self.mul(q).mul(&self.inv()).mul(&q.inv())
    }

    /// Image under the abelianization `Nil -> R^2`.
    pub fn abelianize(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.x1, self.x2, self.x3)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.x1.is_finite() && self.x2.is_finite() && self.x3.is_finite()
    }

    pub fn max_abs_diff(&self, other: &NilPoint) -> f64 {
        (self.x1 - other.x1)
            .abs()
            .max((self.x2 - other.x2).abs())
            .max((self.x3 - other.x3).abs())
    }

    /// Coordinate Jacobian of the left translation `q -> self * q`.
    pub fn left_translation_jacobian(&self) -> nalgebra::Matrix3<f64> {
        nalgebra::Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, self.x1, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LieVec {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl LieVec {
    pub const ZERO: LieVec = LieVec { a1: 0.0, a2: 0.0, a3: 0.0 };
    pub const X1: LieVec = LieVec { a1: 1.0, a2: 0.0, a3: 0.0 };
    pub const X2: LieVec = LieVec { a1: 0.0, a2: 1.0, a3: 0.0 };
    pub const X3: LieVec = LieVec { a1: 0.0, a2: 0.0, a3: 1.0 };

    pub const fn new(a1: f64, a2: f64, a3: f64) -> Self {
        Self { a1, a2, a3 }
    }

    /// The matrix series terminates after the quadratic term since `M^3 = 0`.
    pub fn exp(&self) -> NilPoint {
        NilPoint::new(self.a1, self.a2, self.a3 + 0.5 * self.a1 * self.a2)
    }

    pub fn bracket(&self, w: &LieVec) -> LieVec {
        LieVec::new(0.0, 0.0, self.a1 * w.a2 - self.a2 * w.a1)
    }

    pub fn scale(&self, s: f64) -> LieVec {
        LieVec::new(s * self.a1, s * self.a2, s * self.a3)
    }

    pub fn to_vector(&self) -> Vector3<f64> {
        Vector3::new(self.a1, self.a2, self.a3)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }
}

impl Add for LieVec {
    type Output = LieVec;
    fn add(self, r: LieVec) -> LieVec {
        LieVec::new(self.a1 + r.a1, self.a2 + r.a2, self.a3 + r.a3)
    }
}

impl Sub for LieVec {
    type Output = LieVec;
    fn sub(self, r: LieVec) -> LieVec {
        LieVec::new(self.a1 - r.a1, self.a2 - r.a2, self.a3 - r.a3)
    }
}

impl Neg for LieVec {
    type Output = LieVec;
    fn neg(self) -> LieVec {
        self.scale(-1.0)
    }
}

pub fn bracket(v: &LieVec, w: &LieVec) -> LieVec {
    v.bracket(w)
}
