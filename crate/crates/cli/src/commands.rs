//! The subcommands. Each returns its report and artifacts without touching the filesystem
//! beyond reading inputs.

use std::f64::consts::PI;

use nil_core::{sup_rm, LeftInvariantMetric};
use nil_develop::{develop_with, find_frame, verify_local_nil_with, DevelopOptions, MetricPatch, LOCAL_NIL_TOLERANCE};
use nil_flow::{batch_stability, catalog_initial_metrics, closed_form_diagonal, integrate};
use nil_lattice::{catalog_from_json, default_catalog, is_non_haken, normalize_unit_volume, validate_lattice, BaseKind, DiameterOptions, Lattice, LatticeStructure, base_from_structure};
use nil_rounding::{round, MetricField, RoundOptions};
use serde::{Deserialize, Serialize};

use crate::config::{ClassifyConfig, DevelopConfig, FlowConfig, RoundConfig, StabilityRunConfig};
use crate::error::{stage, CliError, Result};
use crate::inputs::{lattice_by_label, parse_metric, read_input};
use crate::report::{Check, Report};
use crate::Outcome;

/// Relative agreement required between the integrator and the closed form.
pub const CLOSED_FORM_TOL: f64 = 1e-8;
/// `t · sup |Rm|` along any homogeneous trajectory stays below this value.
pub const T_SUP_RM_BOUND: f64 = 0.25;

fn is_diagonal(g: &LeftInvariantMetric) -> bool {
    let m = g.gram();
    m[(0, 1)] == 0.0 && m[(0, 2)] == 0.0 && m[(1, 2)] == 0.0
}

pub fn flow(cfg: &FlowConfig) -> Result<Outcome> {
    let (g0, bytes) = parse_metric(&cfg.g0)?;
    let lattice = cfg.lattice.as_deref().map(lattice_by_label).transpose()?;
    let mut report = Report::new("flow", cfg);
    if let Some(b) = bytes {
        report.input("g0", &b);
    }
    let mut traj = integrate(&g0, cfg.t_end, cfg.tol).map_err(stage("flow"))?;
    if let Some(l) = &lattice {
        traj.attach_lattice(l, &DiameterOptions::quick()).map_err(stage("ratio"))?;
    }
    if is_diagonal(&g0) {
        let rel = |g: &LeftInvariantMetric, t: f64| -> Result<f64> {
            let exact = closed_form_diagonal(&g0, t).map_err(stage("closed form"))?;
            Ok(g.max_abs_diff(&exact) / exact.gram().amax())
        };
        let last = traj.states.last().expect("non-empty trajectory");
        report.check(Check::at_most("final_row_matches_closed_form", rel(&last.g, last.t)?, CLOSED_FORM_TOL));
        let mut worst = 0.0f64;
        for s in &traj.states {
            worst = worst.max(rel(&s.g, s.t)?);
        }
        report.check(Check::at_most("trajectory_matches_closed_form", worst, CLOSED_FORM_TOL));
    }
    let t_k = traj.states.iter().zip(&traj.sup_rm).map(|(s, k)| s.t * k).fold(0.0, f64::max);
    report.check(Check::at_most("t_sup_rm_bounded", t_k, T_SUP_RM_BOUND * (1.0 + 1e-9)));

    #[derive(Serialize)]
    struct Details {
        states: usize,
        final_t: f64,
        final_metric: LeftInvariantMetric,
        final_sup_rm: f64,
        final_ratio: Option<f64>,
    }
    let last = traj.states.last().expect("non-empty trajectory");
    report.details(&Details {
        states: traj.states.len(),
        final_t: last.t,
        final_metric: last.g,
        final_sup_rm: sup_rm(&last.g),
        final_ratio: traj.ratio.as_ref().and_then(|r| r.last().copied()),
    });
    Ok(Outcome::new(report, cfg.report.clone()).artifact(cfg.out.clone(), traj.to_csv().into_bytes()))
}

#[derive(Deserialize)]
struct StabilityInput {
    metric: LeftInvariantMetric,
    lattice: Lattice,
}

/// Bound on `max/min` of the empirical constants across inputs.
pub const CONSTANT_SPREAD: f64 = 2.0;

pub fn stability(cfg: &StabilityRunConfig) -> Result<Outcome> {
    let mut report = Report::new("stability", cfg);
    let inputs: Vec<(LeftInvariantMetric, Lattice)> = match &cfg.catalog {
        Some(path) => {
            let bytes = read_input(path)?;
            report.input(path.display().to_string(), &bytes);
            let entries: Vec<StabilityInput> = serde_json::from_slice(&bytes).map_err(stage("read catalog"))?;
            entries.into_iter().map(|e| (e.metric, e.lattice)).collect()
        }
        None => catalog_initial_metrics(),
    };
    if inputs.is_empty() {
        return Err(CliError::usage("empty stability catalog"));
    }
    let results = batch_stability(&inputs, cfg.eps, &cfg.module_config());
    let mut csv = String::new();
    let mut rows = Vec::new();
    let (mut a_emp, mut growth) = (Vec::new(), Vec::new());
    for (i, ((_, lattice), r)) in inputs.iter().zip(results).enumerate() {
        let s = r.map_err(|e| CliError::Compute { stage: "stability", message: format!("input {i} ({}): {e}", lattice.label) })?;
        let name = format!("{i}:{}", lattice.label);
        let all = |f: fn(&nil_flow::StabilityStep) -> bool| s.steps.iter().all(f);
        report.check(Check::exact(format!("{name}:k_halved"), s.steps.len() as f64, all(|x| x.k_halved)));
        report.check(Check::exact(format!("{name}:interval_doubled"), s.steps.len() as f64, all(|x| x.interval_doubled)));
        let ratio_max = s.steps.iter().map(|x| x.ratio_max).fold(0.0, f64::max);
        report.check(Check::at_most(format!("{name}:ratio_within_c"), ratio_max, s.c * s.eps * (1.0 + 1e-12)));
        for line in s.to_csv().lines().skip(1) {
            csv.push_str(&format!("{i},{},{line}\n", lattice.label));
        }
        a_emp.push(s.a_emp);
        growth.push(s.growth);
        rows.push(s);
    }
    let spread = |v: &[f64]| v.iter().copied().fold(0.0, f64::max) / v.iter().copied().fold(f64::INFINITY, f64::min);
    report.check(Check::at_most("a_spread", spread(&a_emp), CONSTANT_SPREAD));
    report.check(Check::at_most("growth_spread", spread(&growth), CONSTANT_SPREAD));
    report.details(&rows);
    let header = "input,lattice,step,t_start,t_end,k_start,k_end,ratio_max,ratio_end,k_halved,ratio_within_c,ratio_halved,interval_doubled\n";
    Ok(Outcome::new(report, cfg.report.clone()).artifact(cfg.out.clone(), format!("{header}{csv}").into_bytes()))
}

/// Relative tolerance on `|∫ Ω| = 2π k`.
pub const EULER_TOL: f64 = 1e-3;
pub const VOLUME_TOL: f64 = 1e-6;
pub const HOMOTHETY_TOL: f64 = 1e-10;

pub fn round_field(cfg: &RoundConfig) -> Result<Outcome> {
    let bytes = read_input(&cfg.input)?;
    let lattice = lattice_by_label(&cfg.lattice)?;
    let mut report = Report::new("round", cfg);
    report.input(cfg.input.display().to_string(), &bytes);
    let field = MetricField::from_nmf_bytes(&bytes).map_err(stage("read field"))?;
    let opts = RoundOptions { tau: cfg.tau, ..Default::default() };
    let (out, rep) = round(&field, &lattice, &opts).map_err(stage("round"))?;
    report.check(Check::exact("harmonic_kernel_dimension", rep.harmonic.kernel.dimension as f64, rep.harmonic.kernel.dimension == 2));
    let euler = rep.connection.total_curvature.abs() / (2.0 * PI * rep.k as f64);
    report.check(Check::near("euler_number_magnitude", euler, 1.0, EULER_TOL));
    report.check(Check::near("volume", rep.assembly.volume, 1.0, VOLUME_TOL));
    report.check(Check::at_most("homothety_residual", rep.local_nil.homothety_residual, HOMOTHETY_TOL));
    report.details(&rep);
    let artifact = if cfg.json { out.to_nmf_json().map(String::into_bytes) } else { out.to_nmf_bytes() }.map_err(stage("write field"))?;
    let mut outcome = Outcome::new(report, cfg.report.clone());
    if cfg.out.is_some() {
        outcome = outcome.artifact(cfg.out.clone(), artifact);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub label: String,
    pub covering_order: usize,
    pub base: String,
    pub base_kind: BaseKind,
    pub cone_orders: Vec<u32>,
    pub non_haken: bool,
    pub dilation: f64,
}

pub fn classify_one(lattice: &Lattice, radius: usize) -> nil_lattice::Result<Classification> {
    let s = LatticeStructure::analyze(lattice, radius)?;
    let base = base_from_structure(&s)?;
    Ok(Classification {
        label: lattice.label.clone(),
        covering_order: s.index(),
        base: base.name(),
        base_kind: base.kind,
        cone_orders: base.cone_orders.clone(),
        non_haken: is_non_haken(lattice, radius)?,
        dilation: normalize_unit_volume(lattice, &LeftInvariantMetric::standard(), radius)?.dilation,
    })
}

pub fn classify(cfg: &ClassifyConfig) -> Result<Outcome> {
    let mut report = Report::new("lattice classify", cfg);
    let catalog = match &cfg.catalog {
        Some(path) => {
            let bytes = read_input(path)?;
            report.input(path.display().to_string(), &bytes);
            catalog_from_json(&String::from_utf8_lossy(&bytes)).map_err(stage("read catalog"))?
        }
        None => default_catalog(),
    };
    let mut csv = String::from("label,covering_order,base_kind,cone_orders,non_haken,dilation\n");
    let mut rows = Vec::new();
    for lattice in &catalog {
        let v = validate_lattice(lattice, cfg.radius);
        report.check(Check::exact(format!("{}:valid", lattice.label), v.violations.len() as f64, v.is_valid()));
        if !v.is_valid() {
            continue;
        }
        let c = classify_one(lattice, cfg.radius).map_err(|e| CliError::Compute { stage: "classify", message: format!("{}: {e}", lattice.label) })?;
        let cones: Vec<String> = c.cone_orders.iter().map(u32::to_string).collect();
        let kind = match c.base_kind {
            BaseKind::Torus => "torus",
            BaseKind::SphereWithConePoints => "sphere",
        };
        csv.push_str(&format!("{},{},{kind},{},{},{:.17e}\n", c.label, c.covering_order, cones.join(";"), c.non_haken, c.dilation));
        report.check(Check::exact(format!("{}:non_haken_iff_three_cones", c.label), c.cone_orders.len() as f64, c.non_haken == (c.cone_orders.len() == 3)));
        rows.push(c);
    }
    report.details(&rows);
    Ok(Outcome::new(report, cfg.report.clone()).artifact(cfg.out.clone(), csv.into_bytes()))
}

pub fn develop(cfg: &DevelopConfig) -> Result<Outcome> {
    let bytes = read_input(&cfg.input)?;
    let mut report = Report::new("develop", cfg);
    report.input(cfg.input.display().to_string(), &bytes);
    let raw: MetricPatch = serde_json::from_slice(&bytes).map_err(stage("read patch"))?;
    let patch = MetricPatch::new(raw.origin, raw.spacing, raw.n, raw.marked, raw.orientation, raw.values().to_vec()).map_err(stage("read patch"))?;
    let nil = verify_local_nil_with(&patch, LOCAL_NIL_TOLERANCE);
    report.check(Check::at_most("pattern_defect", nil.max_pattern_defect, LOCAL_NIL_TOLERANCE));
    report.check(Check::at_most("scale_spread", nil.lambda_spread, LOCAL_NIL_TOLERANCE));
    let frame = find_frame(&patch).map_err(stage("frame"))?;
    let dev = develop_with(&patch, &frame, &DevelopOptions { defect_factor: cfg.defect_factor }).map_err(stage("develop"))?;
    report.check(Check::at_most("holonomy_defect", dev.holonomy_defect, dev.defect_tolerance));
    report.check(Check::at_most("metric_residual", dev.metric_residual, dev.defect_tolerance));

    #[derive(Serialize)]
    struct Details<'a> {
        local_nil: &'a nil_develop::LocalNilReport,
        frame: &'a nil_develop::NilFrame,
        lambda: f64,
        holonomy_defect: f64,
        defect_tolerance: f64,
        metric_residual: f64,
    }
    report.details(&Details {
        local_nil: &nil,
        frame: &frame,
        lambda: dev.lambda,
        holonomy_defect: dev.holonomy_defect,
        defect_tolerance: dev.defect_tolerance,
        metric_residual: dev.metric_residual,
    });
    Ok(Outcome::new(report, cfg.report.clone()).artifact(cfg.out.clone(), dev.to_csv(&patch).into_bytes()))
}
