//! Word-ball verification, point group and translation subgroup.

use nalgebra::{Matrix2, Matrix3, Vector2};
use nil_core::{NilAffineMap, NilPoint};
use serde::Serialize;

use crate::error::{LatticeError, Result};
use crate::lattice::{Lattice, Word, WordBall};

/// Distance below which a nontrivial element counts as accumulating at the identity.
pub const DISCRETENESS_TOL: f64 = 1e-6;
const MATCH_TOL: f64 = 1e-8;
const FIXED_TOL: f64 = 1e-9;
const INTEGER_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    NotFree,
    NotDiscrete,
    PointGroupNotClosed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub word: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub radius: usize,
    pub ball_size: usize,
    pub point_group_order: usize,
    pub free: bool,
    pub discrete: bool,
    pub point_group_closed: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.free && self.discrete && self.point_group_closed
    }
}

/// Checks freeness, discreteness and point-group closure on the word ball of `radius`.
///
/// Freeness is decided exactly per element: a nontrivial isometry has a fixed point
/// iff its planar image has one and the induced map of that fiber fixes a point.
pub fn validate_lattice(lattice: &Lattice, radius: usize) -> ValidationReport {
    let ball = lattice.word_ball(radius);
    let mut violations = Vec::new();
    for e in ball.elements.iter().skip(1) {
        if fixes_a_point(&e.map) {
            violations.push(Violation { kind: ViolationKind::NotFree, word: e.word.to_string() });
        }
        if e.map.max_abs_diff(&NilAffineMap::IDENTITY) < DISCRETENESS_TOL {
            violations.push(Violation { kind: ViolationKind::NotDiscrete, word: e.word.to_string() });
        }
    }
    for c in &ball.near {
        violations.push(Violation {
            kind: ViolationKind::NotDiscrete,
            word: format!("({})^-1*({})", c.other, c.word),
        });
    }
    let cosets = linear_cosets(&ball);
    if let Some(word) = closure_failure(&ball, &cosets) {
        violations.push(Violation { kind: ViolationKind::PointGroupNotClosed, word });
    }
    let has = |k| violations.iter().any(|v: &Violation| v.kind == k);
    ValidationReport {
        radius,
        ball_size: ball.elements.len(),
        point_group_order: cosets.len(),
        free: !has(ViolationKind::NotFree),
        discrete: !has(ViolationKind::NotDiscrete),
        point_group_closed: !has(ViolationKind::PointGroupNotClosed),
        violations,
    }
}

/// Whether the isometry `g` (not the identity) fixes a point of Nil.
pub fn fixes_a_point(g: &NilAffineMap) -> bool {
    let planar = g.induced_planar();
    let a = planar.linear;
    let m = Matrix2::identity() - a;
    let x0 = if m.norm() < FIXED_TOL {
        // Pure translation: fixes a point only if trivial.
        if planar.offset.norm() > FIXED_TOL {
            return false;
        }
        Vector2::zeros()
    } else {
        // Least-squares solve; consistent iff the residual vanishes.
        let svd = m.svd(true, true);
        let x = svd.solve(&planar.offset, 1e-12).expect("svd solve");
        if (m * x - planar.offset).norm() > FIXED_TOL * (1.0 + planar.offset.norm()) {
            return false;
        }
        x
    };
    let p = NilPoint::new(x0[0], x0[1], 0.0);
    let q = g.apply(&p);
    let d33 = g.linear_part().matrix()[(2, 2)];
    // Fibre map s -> d33 * s + tau.
    d33 < 0.0 || (q.x3 - p.x3).abs() < FIXED_TOL
}

/// One representative (shortest word) per distinct linear part.
pub fn linear_cosets(ball: &WordBall) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    for (i, e) in ball.elements.iter().enumerate() {
        let d = e.map.linear_part().matrix();
        if !reps.iter().any(|&r| (ball.elements[r].map.linear_part().matrix() - d).amax() < MATCH_TOL) {
            reps.push(i);
        }
    }
    reps
}

fn closure_failure(ball: &WordBall, reps: &[usize]) -> Option<String> {
    let mats: Vec<Matrix3<f64>> = reps.iter().map(|&r| *ball.elements[r].map.linear_part().matrix()).collect();
    for (i, a) in mats.iter().enumerate() {
        for (j, b) in mats.iter().enumerate() {
            let p = a * b;
            if !mats.iter().any(|m| (m - p).amax() < MATCH_TOL) {
                let w = &ball.elements[reps[i]].word;
                let v = &ball.elements[reps[j]].word;
                return Some(format!("({w})*({v})"));
            }
        }
    }
    None
}

/// The translation subgroup `Γ ∩ Nil` described by a reduced basis.
#[derive(Debug, Clone, Serialize)]
pub struct TranslationData {
    /// Planar basis of the image lattice, oriented so that `det[u1 u2] > 0`.
    pub u1: [f64; 2],
    pub u2: [f64; 2],
    /// Lifts of `u1`, `u2` in the translation subgroup.
    pub t1: NilPoint,
    pub t2: NilPoint,
    /// Positive generator of the central subgroup.
    pub central_period: f64,
}

impl TranslationData {
    pub fn planar_covolume(&self) -> f64 {
        self.u1[0] * self.u2[1] - self.u1[1] * self.u2[0]
    }

    /// The integer k with `[t1, t2] = z^k`.
    pub fn twist(&self) -> usize {
        (self.planar_covolume() / self.central_period).round() as usize
    }

    /// Coordinates of a planar vector in the basis `u1, u2`.
    pub fn coordinates(&self, v: [f64; 2]) -> [f64; 2] {
        let b = Matrix2::new(self.u1[0], self.u2[0], self.u1[1], self.u2[1]);
        let c = b.try_inverse().expect("basis") * Vector2::new(v[0], v[1]);
        [c[0], c[1]]
    }

    /// Whether a pure translation lies in the subgroup.
    pub fn contains(&self, t: &NilPoint) -> bool {
        let c = self.coordinates([t.x1, t.x2]);
        let n = [c[0].round(), c[1].round()];
        if (c[0] - n[0]).abs() > INTEGER_TOL || (c[1] - n[1]).abs() > INTEGER_TOL {
            return false;
        }
        let lift = power(&self.t1, n[0] as i64).mul(&power(&self.t2, n[1] as i64));
        let r = lift.inv().mul(t);
        let s = r.x3 / self.central_period;
        r.x1.abs() < INTEGER_TOL && r.x2.abs() < INTEGER_TOL && (s - s.round()).abs() < INTEGER_TOL
    }
}

pub fn power(p: &NilPoint, n: i64) -> NilPoint {
    let base = if n < 0 { p.inv() } else { *p };
    (0..n.unsigned_abs()).fold(NilPoint::IDENTITY, |acc, _| acc.mul(&base))
}

/// Point group and translation subgroup of a lattice, extracted from a word ball.
#[derive(Debug, Clone)]
pub struct LatticeStructure {
    /// Coset representatives of `Γ / (Γ ∩ Nil)`, identity first.
    pub cosets: Vec<(NilAffineMap, Word)>,
    pub translations: TranslationData,
    pub ball_size: usize,
}

impl LatticeStructure {
    pub fn analyze(lattice: &Lattice, radius: usize) -> Result<Self> {
        let ball = lattice.word_ball(radius);
        let reps = linear_cosets(&ball);
        if let Some(word) = closure_failure(&ball, &reps) {
            return Err(LatticeError::PointGroupNotClosed { word });
        }
        let cosets = reps.iter().map(|&r| (ball.elements[r].map, ball.elements[r].word.clone())).collect();
        let translations = translation_data(&ball)?;
        Ok(LatticeStructure { cosets, translations, ball_size: ball.elements.len() })
    }

    pub fn index(&self) -> usize {
        self.cosets.len()
    }

    /// Exact membership test for an isometry.
    pub fn contains(&self, g: &NilAffineMap) -> bool {
        let d = g.linear_part().matrix();
        self.cosets.iter().any(|(rep, _)| {
            (rep.linear_part().matrix() - d).amax() < MATCH_TOL
                && self.translations.contains(&rep.inverse().compose(g).translation)
        })
    }
}

fn translation_data(ball: &WordBall) -> Result<TranslationData> {
    let translations: Vec<NilPoint> =
        ball.elements.iter().filter(|e| e.map.is_translation(MATCH_TOL)).map(|e| e.map.translation).collect();
    let central_period = translations
        .iter()
        .filter(|t| t.x1.abs() < MATCH_TOL && t.x2.abs() < MATCH_TOL && t.x3.abs() > MATCH_TOL)
        .map(|t| t.x3.abs())
        .fold(f64::INFINITY, f64::min);
    let planar: Vec<(NilPoint, f64)> = translations
        .iter()
        .map(|t| (*t, t.x1.hypot(t.x2)))
        .filter(|(_, n)| *n > MATCH_TOL)
        .collect();
    let (t1, _) = *planar
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(LatticeError::NoTranslationBasis)?;
    let cross = |t: &NilPoint| t1.x1 * t.x2 - t1.x2 * t.x1;
    let (t2, _) = *planar
        .iter()
        .filter(|(t, _)| cross(t).abs() > MATCH_TOL)
        .min_by(|a, b| cross(&a.0).abs().total_cmp(&cross(&b.0).abs()).then(a.1.total_cmp(&b.1)))
        .ok_or(LatticeError::NoTranslationBasis)?;
    if !central_period.is_finite() {
        return Err(LatticeError::NoTranslationBasis);
    }
    let (t1, t2) = reduce_basis(t1, t2, central_period);
    Ok(TranslationData { u1: [t1.x1, t1.x2], u2: [t2.x1, t2.x2], t1, t2, central_period })
}

/// Lagrange-Gauss reduction of the planar basis, positive orientation, and
/// central parts of the lifts reduced to `[-w/2, w/2]` in exponential coordinates.
fn reduce_basis(mut t1: NilPoint, mut t2: NilPoint, w: f64) -> (NilPoint, NilPoint) {
    let dot = |a: &NilPoint, b: &NilPoint| a.x1 * b.x1 + a.x2 * b.x2;
    loop {
        if dot(&t2, &t2) < dot(&t1, &t1) {
            std::mem::swap(&mut t1, &mut t2);
        }
        let m = (dot(&t1, &t2) / dot(&t1, &t1)).round() as i64;
        if m == 0 {
            break;
        }
        t2 = t2.mul(&power(&t1, -m));
    }
    if t1.x1 * t2.x2 - t1.x2 * t2.x1 < 0.0 {
        std::mem::swap(&mut t1, &mut t2);
    }
    let centre = |t: NilPoint| {
        let c = t.x3 - 0.5 * t.x1 * t.x2;
        t.mul(&NilPoint::central(-(c / w).round() * w))
    };
    (centre(t1), centre(t2))
}

/// The kernel of the point-group homomorphism, as a lattice, with its index.
pub fn translation_subgroup(lattice: &Lattice, radius: usize) -> Result<(Lattice, usize)> {
    let s = LatticeStructure::analyze(lattice, radius)?;
    let t = &s.translations;
    let gens = [t.t1, t.t2, NilPoint::central(t.central_period)].map(NilAffineMap::translation).to_vec();
    Ok((Lattice::new(format!("{}/translations", lattice.label), gens)?, s.index()))
}
