//! Adaptive Dormand–Prince 5(4) integration of the homogeneous flow.

use nalgebra::Matrix3;
use nil_core::{check_spd, homothety_decompose, sup_rm, LeftInvariantMetric};
use serde::Serialize;

use crate::error::{FlowError, Result};
use crate::rhs::flow_rhs;

/// Default local relative tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowState {
    pub t: f64,
    pub g: LeftInvariantMetric,
}

/// Accepted states with curvature diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct FlowTrajectory {
    pub states: Vec<FlowState>,
    /// `sup |Rm|` at each state.
    pub sup_rm: Vec<f64>,
    /// Almost-flat ratio at each state, when a lattice has been attached.
    pub ratio: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Write `G0 = λ² Dᵀ D`, integrate from `λ² I`, and transport back by `D`.
    #[default]
    Homothety,
    /// Integrate all six components directly.
    Direct,
}

/// Integrates `dG/dt = -2 Ric(G)` on `[0, t_end]` with local error at most `tol`.
pub fn integrate(g0: &LeftInvariantMetric, t_end: f64, tol: f64) -> Result<FlowTrajectory> {
    integrate_with(g0, t_end, tol, Strategy::default())
}

pub fn integrate_with(g0: &LeftInvariantMetric, t_end: f64, tol: f64, strategy: Strategy) -> Result<FlowTrajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) || !(tol > 0.0) {
        return Err(FlowError::InvalidArgument(format!("t_end = {t_end}, tol = {tol}")));
    }
    if strategy == Strategy::Homothety {
        if let Ok(h) = homothety_decompose(g0) {
            let l2 = h.lambda * h.lambda;
            let base = LeftInvariantMetric::diagonal(l2, l2, l2)?;
            let d = *h.auto.matrix();
            let mut traj = integrate_direct(&base, t_end, tol)?;
            for s in &mut traj.states {
                s.g = LeftInvariantMetric::new(d.transpose() * s.g.gram() * d)?;
            }
            // The map is an isometry, so curvature diagnostics carry over.
            traj.states[0].g = *g0;
            return Ok(traj);
        }
    }
    integrate_direct(g0, t_end, tol)
}

// Dormand–Prince tableau.

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

fn rhs(g: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    Ok(flow_rhs(&LeftInvariantMetric::new(*g)?))
}

fn integrate_direct(g0: &LeftInvariantMetric, t_end: f64, tol: f64) -> Result<FlowTrajectory> {
    let mut t = 0.0;
    let mut y = *g0.gram();
    let mut f = rhs(&y)?;
    let mut states = vec![FlowState { t, g: *g0 }];
    let mut h = (0.01 * y.amax() / f.amax().max(1e-300)).min(t_end);
    let h_min = 1e-14 * t_end;
    while t < t_end {
        h = h.min(t_end - t);
        if h < h_min {
            return Err(FlowError::StepUnderflow { t });
        }
        let mut k = [Matrix3::zeros(); 7];
        k[0] = f;
        let mut ok = true;
        for s in 1..7 {
            let yi = y + (0..s).fold(Matrix3::zeros(), |acc, j| acc + k[j] * (A[s][j] * h));
            match rhs(&yi) {
                Ok(v) => k[s] = v,
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            h *= 0.25;
            continue;
        }
        // FSAL: the last stage is evaluated at the fifth-order solution.
        let y5 = y + (0..6).fold(Matrix3::zeros(), |acc, j| acc + k[j] * (A[6][j] * h));
        let y4 = y + (0..7).fold(Matrix3::zeros(), |acc, j| acc + k[j] * (B4[j] * h));
        let err = (y5 - y4).amax() / (tol * y.amax().max(y5.amax()));
        if err <= 1.0 && check_spd(&y5).is_ok() {
            t += h;
            y = (y5 + y5.transpose()) * 0.5;
            f = k[6];
            states.push(FlowState { t, g: LeftInvariantMetric::new(y).map_err(|_| FlowError::NotPositiveDefinite { t })? });
        } else if err <= 1.0 {
            return Err(FlowError::NotPositiveDefinite { t: t + h });
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    let sup_rm = states.iter().map(|s| sup_rm(&s.g)).collect();
    Ok(FlowTrajectory { states, sup_rm, ratio: None })
}

impl FlowTrajectory {
    pub fn t_end(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    pub fn final_metric(&self) -> LeftInvariantMetric {
        self.states.last().expect("non-empty trajectory").g
    }

    /// Dense output by cubic Hermite interpolation between accepted states.
    pub fn at(&self, t: f64) -> LeftInvariantMetric {
        let n = self.states.len();
        if t <= self.states[0].t {
            return self.states[0].g;
        }
        if t >= self.states[n - 1].t {
            return self.states[n - 1].g;
        }
        let i = self.states.partition_point(|s| s.t <= t) - 1;
        let (a, b) = (&self.states[i], &self.states[i + 1]);
        let h = b.t - a.t;
        let s = (t - a.t) / h;
        let (fa, fb) = (flow_rhs(&a.g), flow_rhs(&b.g));
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let m = a.g.gram() * h00 + fa * (h10 * h) + b.g.gram() * h01 + fb * (h11 * h);
        LeftInvariantMetric::new(m).unwrap_or(a.g)
    }

    /// CSV with columns `t, g11, g12, g13, g22, g23, g33, sup_rm, ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,g11,g12,g13,g22,g23,g33,sup_rm,ratio\n");
        for (i, s) in self.states.iter().enumerate() {
            let g = s.g.gram();
            let ratio = self.ratio.as_ref().map(|r| format!("{:.17e}", r[i])).unwrap_or_default();
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                s.t,
                g[(0, 0)],
                g[(0, 1)],
                g[(0, 2)],
                g[(1, 1)],
                g[(1, 2)],
                g[(2, 2)],
                self.sup_rm[i],
                ratio
            ));
        }
        out
    }
}
