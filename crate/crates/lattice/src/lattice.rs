use std::collections::HashMap;
use std::fmt;

use nil_core::{NilAffineMap, NilAutomorphism, NilPoint};
use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};

/// Tolerance for the isometry check on generators.
pub const ISOMETRY_TOL: f64 = 1e-9;
/// Default word-ball radius for verification.
pub const DEFAULT_RADIUS: usize = 6;

const KEY_SCALE: f64 = 1e7;
const COINCIDENCE_TOL: f64 = 1e-11;

/// A finitely generated group of isometries of `(Nil, g_Nil)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr")]
pub struct Lattice {
    pub label: String,
    generators: Vec<NilAffineMap>,
}

#[derive(Deserialize)]
struct LatticeRepr {
    label: String,
    generators: Vec<NilAffineMap>,
}

impl TryFrom<LatticeRepr> for Lattice {
    type Error = LatticeError;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        Lattice::new(r.label, r.generators)
    }
}

impl Lattice {
    pub fn new(label: impl Into<String>, generators: Vec<NilAffineMap>) -> Result<Self> {
        if generators.is_empty() {
            return Err(LatticeError::Empty);
        }
        for (index, g) in generators.iter().enumerate() {
            if !g.is_isometry(ISOMETRY_TOL) || !g.translation.is_finite() {
                return Err(LatticeError::NotIsometry { index });
            }
        }
        Ok(Lattice { label: label.into(), generators })
    }

    pub fn generators(&self) -> &[NilAffineMap] {
        &self.generators
    }

    /// Conjugates every generator by `phi`, giving `phi Γ phi⁻¹`.
    pub fn conjugated(&self, phi: &NilAffineMap, label: impl Into<String>) -> Result<Lattice> {
        Lattice::new(label, self.generators.iter().map(|g| phi.conjugate(g)).collect())
    }

    /// Conjugation by the Carnot dilation with factor `mu`.
    pub fn dilated(&self, mu: f64) -> Result<Lattice> {
        let delta = NilAffineMap::automorphism(NilAutomorphism::carnot(mu));
        self.conjugated(&delta, self.label.clone())
    }

    /// Evaluates a word given as signed one-based generator indices.
    pub fn evaluate(&self, word: &Word) -> NilAffineMap {
        word.0.iter().fold(NilAffineMap::IDENTITY, |acc, &letter| acc.compose(&self.letter(letter)))
    }

    fn letter(&self, letter: i32) -> NilAffineMap {
        let g = &self.generators[letter.unsigned_abs() as usize - 1];
        if letter > 0 {
            *g
        } else {
            g.inverse()
        }
    }

    /// Enumerates all distinct elements of word length at most `radius`.
    pub fn word_ball(&self, radius: usize) -> WordBall {
        let n = self.generators.len() as i32;
        let letters: Vec<(i32, NilAffineMap)> =
            (1..=n).flat_map(|i| [i, -i]).map(|l| (l, self.letter(l))).collect();
        let mut elements = vec![BallElement { map: NilAffineMap::IDENTITY, word: Word::default() }];
        let mut index = HashMap::new();
        index.insert(key(&NilAffineMap::IDENTITY), 0usize);
        let mut front = vec![0usize];
        let mut near = Vec::new();
        for _ in 0..radius {
            let mut next = Vec::new();
            for &e in &front {
                for (l, g) in &letters {
                    let map = elements[e].map.compose(g);
                    let k = key(&map);
                    if let Some(&existing) = index.get(&k) {
                        let gap = map.max_abs_diff(&elements[existing].map);
                        if gap > COINCIDENCE_TOL {
                            let mut word = elements[e].word.clone();
                            word.0.push(*l);
                            near.push(NearCoincidence { word, other: elements[existing].word.clone(), gap });
                        }
                        continue;
                    }
                    let mut word = elements[e].word.clone();
                    word.0.push(*l);
                    index.insert(k, elements.len());
                    next.push(elements.len());
                    elements.push(BallElement { map, word });
                }
            }
            front = next;
        }
        WordBall { radius, elements, near }
    }
}

/// A word in the generators: signed one-based indices, negative for inverses.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Word(pub Vec<i32>);

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "e");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&l| if l > 0 { format!("g{l}") } else { format!("g{}^-1", -l) })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

#[derive(Debug, Clone)]
pub struct BallElement {
    pub map: NilAffineMap,
    pub word: Word,
}

#[derive(Debug, Clone)]
pub struct WordBall {
    pub radius: usize,
    pub elements: Vec<BallElement>,
    /// Pairs of distinct elements that agree to the key resolution.
    pub near: Vec<NearCoincidence>,
}

/// `word` and `other` evaluate to distinct elements at distance `gap`.
#[derive(Debug, Clone)]
pub struct NearCoincidence {
    pub word: Word,
    pub other: Word,
    pub gap: f64,
}

fn key(g: &NilAffineMap) -> [i64; 12] {
    let t = g.translation;
    let d = g.linear_part().matrix();
    let mut k = [0i64; 12];
    for (slot, v) in k.iter_mut().zip([t.x1, t.x2, t.x3].into_iter().chain(d.iter().copied())) {
        *slot = (v * KEY_SCALE).round() as i64;
    }
    k
}

/// Left translation by the lift `exp(v1 X1 + v2 X2)` of a planar vector.
pub fn planar_lift(v: [f64; 2]) -> NilPoint {
    NilPoint::new(v[0], v[1], 0.5 * v[0] * v[1])
}
