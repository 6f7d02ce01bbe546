//! A small seeded battery touching every module. Its report contains no timings or paths,
//! so reruns with one seed are byte-identical.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3};
use nil_core::{bracket_defect, coframe, curvature, factor_automorphism, ricci, LeftInvariantMetric, NilAutomorphism, NilPoint};
use nil_develop::{develop, find_frame, MetricPatch, Orientation};
use nil_flow::{closed_form_diagonal, integrate, DEFAULT_TOL};
use nil_lattice::{default_catalog, gamma, quotient_volume, DEFAULT_RADIUS};
use nil_rounding::{perturbed, pullback_homogeneous, round, MeshedNilmanifold, RoundOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::commands::{classify_one, CLOSED_FORM_TOL, EULER_TOL, T_SUP_RM_BOUND, VOLUME_TOL};
use crate::config::SelftestConfig;
use crate::error::{stage, Result};
use crate::report::{Check, Report};
use crate::Outcome;

const ALGEBRA_SAMPLES: usize = 1000;

fn point(rng: &mut ChaCha8Rng) -> NilPoint {
    NilPoint::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0))
}

fn automorphism(rng: &mut ChaCha8Rng) -> NilAutomorphism {
    loop {
        let a: Matrix2<f64> = Matrix2::from_fn(|_, _| rng.gen_range(-2.0..2.0));
        if a.determinant().abs() > 0.1 {
            let shear = NilAutomorphism::shear(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            return shear.compose(&NilAutomorphism::block(a).expect("invertible block"));
        }
    }
}

/// Largest relative violation over group laws, exp/log, factorization and brackets.
fn algebra(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..ALGEBRA_SAMPLES {
        let (p, q, r) = (point(rng), point(rng), point(rng));
        let scale = 1.0f64.max(p.mul(&q).mul(&r).x3.abs());
        worst = worst.max(p.mul(&q).mul(&r).max_abs_diff(&p.mul(&q.mul(&r))) / scale);
        worst = worst.max(p.mul(&p.inv()).max_abs_diff(&NilPoint::IDENTITY));
        worst = worst.max(p.log().exp().max_abs_diff(&p) / 1.0f64.max(p.x3.abs()));
        let d = automorphism(rng);
        let back = factor_automorphism(d.matrix()).map_err(stage("algebra"))?.compose();
        worst = worst.max((back - d.matrix()).amax() / d.matrix().amax());
        worst = worst.max(bracket_defect(d.matrix()));
        let (v, w) = (p.log(), q.log());
        let lhs = d.apply_vec(&v.bracket(&w));
        let rhs = d.apply_vec(&v).bracket(&d.apply_vec(&w));
        worst = worst.max((lhs - rhs).to_vector().amax() / 1.0f64.max(lhs.to_vector().amax()));
    }
    Ok(worst)
}

fn random_metric(rng: &mut ChaCha8Rng) -> LeftInvariantMetric {
    let m = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    LeftInvariantMetric::new(m.transpose() * m + Matrix3::identity() * rng.gen_range(0.05..1.0)).expect("SPD")
}

#[derive(Serialize)]
struct Details {
    flow_metrics: Vec<LeftInvariantMetric>,
    classification: Vec<crate::commands::Classification>,
    volume_slope: f64,
    rounding_displacement: f64,
    euler_number: f64,
    develop_lambda: f64,
}

pub fn selftest(cfg: &SelftestConfig) -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut report = Report::new("selftest", &serde_json::json!({ "seed": cfg.seed }));

    report.check(Check::at_most("algebra_identities", algebra(&mut rng)?, 1e-12));

    let std_ric = curvature(&LeftInvariantMetric::standard()).ricci_frame;
    let expected = Matrix3::from_diagonal(&nalgebra::Vector3::new(-0.5, -0.5, 0.5));
    report.check(Check::at_most("standard_ricci", (std_ric - expected).amax(), 1e-12));
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let g = random_metric(&mut rng);
        let c = rng.gen_range(0.1..10.0);
        let scaled = ricci(&g.scaled(c).map_err(stage("curvature"))?);
        worst = worst.max((scaled - ricci(&g)).amax() / ricci(&g).amax());
    }
    report.check(Check::at_most("ricci_scale_invariance", worst, 1e-10));

    let mut flow_metrics = Vec::new();
    let (mut flow_err, mut t_k) = (0.0f64, 0.0f64);
    for _ in 0..5 {
        let g0 = LeftInvariantMetric::diagonal(rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)).expect("SPD");
        let traj = integrate(&g0, 20.0, DEFAULT_TOL).map_err(stage("flow"))?;
        for (s, k) in traj.states.iter().zip(&traj.sup_rm) {
            let exact = closed_form_diagonal(&g0, s.t).map_err(stage("flow"))?;
            flow_err = flow_err.max(s.g.max_abs_diff(&exact) / exact.gram().amax());
            t_k = t_k.max(s.t * k);
        }
        flow_metrics.push(g0);
    }
    report.check(Check::at_most("flow_closed_form", flow_err, CLOSED_FORM_TOL));
    report.check(Check::at_most("flow_t_sup_rm", t_k, T_SUP_RM_BOUND * (1.0 + 1e-9)));

    let expected = [("Gamma1", "torus"), ("Z2", "S2(2,2,2,2)"), ("Z3", "S2(3,3,3)"), ("Z4", "S2(2,4,4)"), ("Z6", "S2(2,3,6)")];
    let catalog = default_catalog();
    let mut classification = Vec::new();
    let mut mismatches = 0;
    for (label, base) in expected {
        let lattice = catalog.iter().find(|l| l.label == label).expect("shipped lattice");
        let c = classify_one(lattice, DEFAULT_RADIUS).map_err(stage("classify"))?;
        mismatches += usize::from(c.base != base || c.non_haken != (c.cone_orders.len() == 3));
        classification.push(c);
    }
    report.check(Check::exact("classification_mismatches", mismatches as f64, mismatches == 0));

    let lam: f64 = rng.gen_range(0.3..3.0);
    let g1 = gamma(1);
    let std = LeftInvariantMetric::standard();
    let v0 = quotient_volume(&g1, &std, DEFAULT_RADIUS).map_err(stage("volume"))?;
    let v1 = quotient_volume(&g1.dilated(lam).map_err(stage("volume"))?, &std, DEFAULT_RADIUS).map_err(stage("volume"))?;
    let volume_slope = (v1 / v0).ln() / lam.ln();
    report.check(Check::near("volume_slope", volume_slope, 4.0, 1e-10));

    let mesh = MeshedNilmanifold::new("Gamma1", 1, [8, 8, 8]).map_err(stage("mesh"))?;
    let f = pullback_homogeneous(&std, &mesh);
    let opts = RoundOptions::default();
    let (out, _) = round(&f, &g1, &opts).map_err(stage("round"))?;
    let rounding_displacement = out.max_rel_diff(&f);
    report.check(Check::at_most("round_fixes_homogeneous", rounding_displacement, 1e-10));
    let noisy = perturbed(&mesh, &f, 0.05, rng.gen(), 0.2).map_err(stage("round"))?;
    let (_, rep) = round(&noisy, &g1, &opts).map_err(stage("round"))?;
    report.check(Check::exact("harmonic_kernel_dimension", rep.harmonic.kernel.dimension as f64, rep.harmonic.kernel.dimension == 2));
    let euler_number = rep.connection.total_curvature / (2.0 * PI);
    report.check(Check::near("euler_number_magnitude", euler_number.abs(), 1.0, EULER_TOL));
    report.check(Check::near("rounded_volume", rep.assembly.volume, 1.0, VOLUME_TOL));

    let lambda = rng.gen_range(0.5..2.0);
    let origin: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let patch = MetricPatch::from_fn(origin, [0.125; 3], [9; 3], [4; 3], Orientation::Positive, |y| {
        let j = coframe(y[0]);
        j.transpose() * j * (lambda * lambda)
    })
    .map_err(stage("develop"))?;
    let frame = find_frame(&patch).map_err(stage("frame"))?;
    let dev = develop(&patch, &frame).map_err(stage("develop"))?;
    report.check(Check::near("develop_scale", dev.lambda, lambda, 1e-6 * lambda));
    report.check(Check::at_most("develop_metric_residual", dev.metric_residual, 1e-3));

    report.details(&Details {
        flow_metrics,
        classification,
        volume_slope,
        rounding_displacement,
        euler_number,
        develop_lambda: dev.lambda,
    });
    let json = report.to_json();
    Ok(Outcome::new(report, None).artifact(cfg.out.clone(), json.into_bytes()))
}
