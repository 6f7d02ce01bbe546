use nalgebra::Matrix3;
use nil_core::{sup_rm, LeftInvariantMetric};
use serde::Serialize;

use crate::error::{FlowError, Result};
use crate::integrate::{integrate, FlowTrajectory};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ClaimConstants {
    /// `sup_t max(|Rm_t|, λ_max(|Rm_t| g_t relative to g_0))`.
    pub c_prime: f64,
    /// First time with `|Rm_t| ≤ 1/8` and `|Rm_t| g_t ≤ g_0 / 16`.
    pub a_prime: f64,
    /// First time with `|Rm_t| ≤ 1/8` alone.
    pub curvature_time: f64,
    /// Factor applied to `G0` to normalize `|Rm| = 1`.
    pub normalization: f64,
}

/// Empirical constants of the homogeneous claim for the flow from `G0`, after
/// rescaling so that `|Rm_{g_0}| = 1`. Bilinear bounds are matrix inequalities in
/// the X-basis, checked through the largest generalized eigenvalue.
pub fn claim_constants(g0: &LeftInvariantMetric, tol: f64) -> Result<ClaimConstants> {
    let k0 = sup_rm(g0);
    if !(k0 > 0.0) {
        return Err(FlowError::Precondition("initial metric is flat".into()));
    }
    let g0 = g0.scaled(k0)?;
    let l_inv = g0.gram().cholesky().expect("SPD").l().try_inverse().expect("invertible");
    let bilinear = |g: &LeftInvariantMetric| {
        let m: Matrix3<f64> = l_inv * (g.gram() * sup_rm(g)) * l_inv.transpose();
        m.symmetric_eigenvalues().max()
    };
    let both = |g: &LeftInvariantMetric| sup_rm(g) <= 0.125 && bilinear(g) <= 1.0 / 16.0;
    let mut t_end = 1.0;
    let traj = loop {
        let traj = integrate(&g0, t_end, tol)?;
        if both(&traj.final_metric()) {
            break traj;
        }
        t_end *= 2.0;
        if t_end > 1e8 {
            return Err(FlowError::Precondition("bilinear bound not reached".into()));
        }
    };
    let c_prime = traj.states.iter().map(|s| sup_rm(&s.g).max(bilinear(&s.g))).fold(0.0, f64::max);
    let a_prime = first_passage(&traj, both);
    let curvature_time = first_passage(&traj, |g| sup_rm(g) <= 0.125);
    Ok(ClaimConstants { c_prime, a_prime, curvature_time, normalization: k0 })
}

/// First time a monotone condition holds, by bracketing on accepted states and bisection.
pub(crate) fn first_passage(traj: &FlowTrajectory, cond: impl Fn(&LeftInvariantMetric) -> bool) -> f64 {
    let i = traj.states.iter().position(|s| cond(&s.g)).expect("condition holds at the end");
    if i == 0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (traj.states[i - 1].t, traj.states[i].t);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cond(&traj.at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}
