//! The frame at the marked point singled out by the Nil structure.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use nil_rounding::point_curvature;
use serde::Serialize;

use crate::error::{DevelopError, Result};
use crate::patch::MetricPatch;
use crate::verify::{verify_local_nil_with, LOCAL_NIL_TOLERANCE};

/// Orthonormal frame at the marked point, in patch coordinates.
///
/// It is the value of a left-invariant orthonormal frame `E1, E2, E3` of `λ² g_Nil` with
/// `[E1, E2] = E3 / λ`. For `λ = 1` this is `E3 = [E1, E2]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NilFrame {
    pub f: [Vector3<f64>; 3],
    pub lambda: f64,
}

impl NilFrame {
    /// Columns `f1, f2, f3`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::from_columns(&self.f)
    }
}

/// Relative gap required between the positive Ricci eigenvalue and the others.
const RICCI_GAP: f64 = 0.5;
/// Allowed relative departure of `λ η([f1, f2])` from 1.
const BRACKET_TOLERANCE: f64 = 0.1;

/// Eigenvalues of `Ric` relative to `g`, ascending, with `g`-orthonormal eigenvectors.
fn ricci_eigen(ric: &Matrix3<f64>, g: &Matrix3<f64>) -> ([f64; 3], [Vector3<f64>; 3]) {
    let l = g.cholesky().expect("SPD patch").l();
    let linv = l.try_inverse().expect("SPD patch");
    let m = linv * ric * linv.transpose();
    let eig = SymmetricEigen::new((m + m.transpose()) * 0.5);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.map(|i| eig.eigenvalues[i]);
    let vectors = order.map(|i| linv.transpose() * eig.eigenvectors.column(i));
    (values, vectors)
}

/// Unit central direction at an interior vertex, from the positive Ricci eigenvalue.
fn central_direction(patch: &MetricPatch, v: usize) -> Result<Vector3<f64>> {
    let c = point_curvature(&patch.jet(v)).ok_or(DevelopError::Degenerate(0.0))?;
    let (mu, e) = ricci_eigen(&c.ricci, &patch.values()[v]);
    let gap = (mu[2] - mu[1]) / mu[2].abs().max(f64::MIN_POSITIVE);
    if !(mu[2] > 0.0 && gap > RICCI_GAP) {
        return Err(DevelopError::Degenerate(gap));
    }
    Ok(e[2])
}

/// Fixed sign for a line: positive third coordinate, or the largest coordinate if that vanishes.
fn signed(v: Vector3<f64>) -> Vector3<f64> {
    let k = if v[2].abs() > 1e-8 * v.amax() { 2 } else { v.iamax() };
    if v[k] < 0.0 {
        -v
    } else {
        v
    }
}

fn inner(g: &Matrix3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    (a.transpose() * g * b)[0]
}

/// `dη` at the marked vertex for `η = g(e3, ·)`, with `e3` aligned to `f3` at the neighbours.
fn d_eta(patch: &MetricPatch, f3: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let m = patch.marked_index();
    let g0 = patch.values()[m];
    let eta = |d: [i64; 3]| -> Result<Vector3<f64>> {
        let w = patch.shifted(m, d).expect("margin keeps neighbours inside");
        let e = central_direction(patch, w)?;
        let e = if inner(&g0, &e, f3) < 0.0 { -e } else { e };
        Ok(patch.values()[w] * e)
    };
    let mut grad = Matrix3::zeros();
    for a in 0..3 {
        let mut d = [0; 3];
        d[a] = 1;
        let col = (eta(d)? - eta(d.map(|x| -x))?) / (2.0 * patch.spacing[a]);
        grad.set_row(a, &col.transpose());
    }
    Ok(grad - grad.transpose())
}

/// `f3` from the Ricci eigenstructure, `f1, f2` completing it with `[f1, f2]` along `+f3`.
pub fn find_frame(patch: &MetricPatch) -> Result<NilFrame> {
    let report = verify_local_nil_with(patch, LOCAL_NIL_TOLERANCE);
    if !report.is_local_nil {
        return Err(DevelopError::NotLocallyNil { defect: report.max_pattern_defect, spread: report.lambda_spread });
    }
    let lambda = report.lambda;
    let m = patch.marked_index();
    let g = patch.values()[m];
    let f3 = signed(central_direction(patch, m)?);
    let complete = |by: &[Vector3<f64>]| {
        let residual = |x: Vector3<f64>| {
            let mut y = x;
            for b in by {
                y -= b * inner(&g, &y, b);
            }
            y
        };
        let y = [Vector3::x(), Vector3::y(), Vector3::z()].map(residual).into_iter().max_by(|a, b| inner(&g, a, a).total_cmp(&inner(&g, b, b))).expect("three axes");
        y / inner(&g, &y, &y).sqrt()
    };
    let f1 = complete(&[f3]);
    let mut f2 = complete(&[f3, f1]);
    // dη(f1, f2) = −η([f1, f2]) for the extended left-invariant fields.
    let d = d_eta(patch, &f3)?;
    let mut bracket = -(f1.transpose() * d * f2)[0] * lambda;
    if bracket < 0.0 {
        f2 = -f2;
        bracket = -bracket;
    }
    if (bracket - 1.0).abs() > BRACKET_TOLERANCE {
        return Err(DevelopError::Bracket(bracket));
    }
    let frame = NilFrame { f: [f1, f2, f3], lambda };
    if frame.matrix().determinant() * patch.orientation.sign() <= 0.0 {
        return Err(DevelopError::OrientationMismatch);
    }
    Ok(frame)
}
