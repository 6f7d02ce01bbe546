//! The iteration `T_j = T_{j-1} + A K_{T_{j-1}}⁻¹` and its four assertions.

use nil_core::{sup_rm, LeftInvariantMetric};
use nil_lattice::{DiameterOptions, Lattice};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{FlowError, Result};
use crate::integrate::{integrate, FlowTrajectory, DEFAULT_TOL};
use crate::ratio::almost_flat_ratio;

const TUNING_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct StabilityConfig {
    /// Schedule constant; tuned from the run when `None`.
    pub a: Option<f64>,
    /// Almost-flatness growth constant; tuned from the run when `None`.
    pub c: Option<f64>,
    pub eps0: f64,
    pub steps: usize,
    /// Ratio samples per interval, endpoints included.
    pub samples: usize,
    pub tol: f64,
    pub diameter: DiameterOptions,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            a: None,
            c: None,
            eps0: 0.01,
            steps: 5,
            samples: 3,
            tol: DEFAULT_TOL,
            diameter: DiameterOptions::quick(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityStep {
    pub index: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub k_start: f64,
    pub k_end: f64,
    pub ratio_end: f64,
    pub ratio_max: f64,
    pub k_halved: bool,
    pub ratio_within_c: bool,
    pub ratio_halved: bool,
    pub interval_doubled: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilitySchedule {
    pub eps: f64,
    pub eps0: f64,
    pub a: f64,
    pub c: f64,
    pub initial_ratio: f64,
    /// Smallest schedule constant making assertions (3) and (4) hold at every step.
    pub a_emp: f64,
    /// Per-step minimal constants from the tuning pass.
    pub step_constants: Vec<f64>,
    /// `max ratio / ε` over the run: the smallest `C` for assertion (2).
    pub c_emp: f64,
    /// `max ratio / initial ratio` over the run.
    pub growth: f64,
    pub steps: Vec<StabilityStep>,
}

impl StabilitySchedule {
    pub fn times(&self) -> Vec<f64> {
        std::iter::once(0.0).chain(self.steps.iter().map(|s| s.t_end)).collect()
    }

    /// CSV with one row per step.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "step,t_start,t_end,k_start,k_end,ratio_max,ratio_end,k_halved,ratio_within_c,ratio_halved,interval_doubled\n",
        );
        for s in &self.steps {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{},{},{},{}\n",
                s.index,
                s.t_start,
                s.t_end,
                s.k_start,
                s.k_end,
                s.ratio_max,
                s.ratio_end,
                s.k_halved,
                s.ratio_within_c,
                s.ratio_halved,
                s.interval_doubled
            ));
        }
        out
    }
}

struct Runner<'a> {
    lattice: &'a Lattice,
    eps: f64,
    cfg: &'a StabilityConfig,
}

impl Runner<'_> {
    fn ratio(&self, g: &LeftInvariantMetric) -> Result<f64> {
        almost_flat_ratio(g, self.lattice, &self.cfg.diameter)
    }

    /// Flow from `g` over `[0, s_max / K(g)]`.
    fn segment(&self, g: &LeftInvariantMetric, s_max: f64) -> Result<FlowTrajectory> {
        integrate(g, s_max / sup_rm(g), self.cfg.tol)
    }

    /// Smallest `s` such that the state at `s / K0` has `K ≤ K0/2` and ratio `≤ ε/2`.
    fn min_constant(&self, g: &LeftInvariantMetric) -> Result<f64> {
        let k0 = sup_rm(g);
        let mut s_max = 0.5;
        let mut traj = self.segment(g, s_max)?;
        while sup_rm(&traj.final_metric()) > 0.5 * k0 {
            s_max *= 2.0;
            if s_max > 1e6 {
                return Err(FlowError::Precondition("curvature does not halve".into()));
            }
            traj = self.segment(g, s_max)?;
        }
        let s_k = crate::claim::first_passage(&traj, |m| sup_rm(m) <= 0.5 * k0) * k0;
        if self.ratio(&traj.at(s_k / k0))? <= 0.5 * self.eps {
            return Ok(s_k);
        }
        while self.ratio(&traj.final_metric())? > 0.5 * self.eps {
            s_max *= 2.0;
            if s_max > 1e6 {
                return Err(FlowError::Precondition("almost-flat ratio does not halve".into()));
            }
            traj = self.segment(g, s_max)?;
        }
        let (mut lo, mut hi) = (s_k, s_max);
        while hi - lo > 1e-6 * hi {
            let mid = 0.5 * (lo + hi);
            if self.ratio(&traj.at(mid / k0))? <= 0.5 * self.eps {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(hi)
    }
}

/// Runs the stability schedule from `G0` on `Nil/Γ` at level `ε`.
///
/// Requires `ratio(G0) ≤ ε ≤ ε0`. When the constants are not configured, a first
/// pass measures the smallest admissible `A` and the run is then verified with it.
pub fn stability_run(
    g0: &LeftInvariantMetric,
    lattice: &Lattice,
    eps: f64,
    cfg: &StabilityConfig,
) -> Result<StabilitySchedule> {
    let runner = Runner { lattice, eps, cfg };
    let initial_ratio = runner.ratio(g0)?;
    if !(eps <= cfg.eps0) {
        return Err(FlowError::Precondition(format!("ε = {eps} exceeds ε0 = {}", cfg.eps0)));
    }
    if !(initial_ratio <= eps) {
        return Err(FlowError::Precondition(format!("initial ratio {initial_ratio:.6e} exceeds ε = {eps}")));
    }
    if !(sup_rm(g0) > 0.0) {
        return Err(FlowError::Precondition("initial metric is flat".into()));
    }

    // Tuning pass: advance each step by its own minimal constant.
    let mut step_constants = Vec::with_capacity(cfg.steps);
    let mut g = *g0;
    for _ in 0..cfg.steps {
        let s = runner.min_constant(&g)?;
        step_constants.push(s);
        g = runner.segment(&g, s)?.final_metric();
    }
    let a_emp = step_constants.iter().copied().fold(0.0, f64::max);
    // The tuned constant sits on the threshold; a relative margin absorbs round-off.
    let a = cfg.a.unwrap_or(a_emp * (1.0 + TUNING_MARGIN));

    // Verification pass with the schedule constant `a`.
    let mut steps = Vec::with_capacity(cfg.steps);
    let mut g = *g0;
    let mut t = 0.0;
    let mut ratio_max_all = initial_ratio;
    let mut prev_interval = 0.0;
    let mut ratio_start = initial_ratio;
    for index in 1..=cfg.steps {
        let k_start = sup_rm(&g);
        let traj = runner.segment(&g, a)?;
        let interval = a / k_start;
        let n = cfg.samples.max(2);
        let mut samples = vec![ratio_start];
        for i in 1..n {
            let g_i = if i == n - 1 { traj.final_metric() } else { traj.at(interval * i as f64 / (n - 1) as f64) };
            samples.push(runner.ratio(&g_i)?);
        }
        let ratio_max = samples.iter().copied().fold(0.0, f64::max);
        let ratio_end = *samples.last().expect("samples");
        let end = traj.final_metric();
        let k_end = sup_rm(&end);
        ratio_max_all = ratio_max_all.max(ratio_max);
        steps.push(StabilityStep {
            index,
            t_start: t,
            t_end: t + interval,
            k_start,
            k_end,
            ratio_end,
            ratio_max,
            k_halved: k_end <= 0.5 * k_start,
            ratio_within_c: true,
            ratio_halved: ratio_end <= 0.5 * eps,
            interval_doubled: index == 1 || interval >= 2.0 * prev_interval * (1.0 - 1e-12),
        });
        prev_interval = interval;
        ratio_start = ratio_end;
        t += interval;
        g = end;
    }
    let c_emp = ratio_max_all / eps;
    let c = cfg.c.unwrap_or(c_emp);
    for s in &mut steps {
        s.ratio_within_c = s.ratio_max <= c * eps * (1.0 + 1e-12);
    }
    let schedule = StabilitySchedule {
        eps,
        eps0: cfg.eps0,
        a,
        c,
        initial_ratio,
        a_emp,
        step_constants,
        c_emp,
        growth: ratio_max_all / initial_ratio,
        steps,
    };
    let violation = schedule.steps.iter().find_map(|s| {
        if !s.k_halved {
            Some((s.index, 4, format!("K went from {:.6e} to {:.6e}", s.k_start, s.k_end)))
        } else if !s.ratio_within_c {
            Some((s.index, 2, format!("ratio {:.6e} exceeds C·ε = {:.6e}", s.ratio_max, c * eps)))
        } else if !s.ratio_halved {
            Some((s.index, 3, format!("ratio {:.6e} exceeds ε/2 at the endpoint", s.ratio_end)))
        } else {
            None
        }
    });
    match violation {
        Some((step, assertion, detail)) => {
            Err(FlowError::Assertion { step, assertion, detail, schedule: Box::new(schedule) })
        }
        None => Ok(schedule),
    }
}

/// Runs several schedules in parallel; results keep the input order.
pub fn batch_stability(
    inputs: &[(LeftInvariantMetric, Lattice)],
    eps: f64,
    cfg: &StabilityConfig,
) -> Vec<Result<StabilitySchedule>> {
    inputs.par_iter().map(|(g, l)| stability_run(g, l, eps, cfg)).collect()
}
