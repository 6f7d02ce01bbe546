use std::f64::consts::PI;

use nil_core::LeftInvariantMetric;
use nil_lattice::catalog::gamma;
use nil_rounding::{
    assemble, build_torus, connection_and_curvature, fiber_extraction, harmonic_one_forms, period_map, perturbed, pullback_homogeneous, round, smooth,
    ConnectionData, HarmonicBasis, MeshedNilmanifold, MetricField, RoundOptions, SmoothOptions, TorusData,
};

fn mesh(k: u32, n: usize) -> MeshedNilmanifold {
    MeshedNilmanifold::new(format!("Gamma{k}"), k as usize, [n, n, n]).unwrap()
}

/// The unit-volume metric `diag(√k, √k, k)` on `Γ_k`.
fn unit_volume(k: u32) -> LeftInvariantMetric {
    let s = (k as f64).sqrt();
    LeftInvariantMetric::diagonal(s, s, k as f64).unwrap()
}

fn stages(m: &MeshedNilmanifold, f: &MetricField) -> (HarmonicBasis, TorusData, ConnectionData) {
    let b = harmonic_one_forms(m, f).unwrap();
    let t = build_torus(&b, m).unwrap();
    let phi = period_map(m, &b, &t, 0).unwrap();
    let fib = fiber_extraction(m, f, &b, &t, phi).unwrap();
    let c = connection_and_curvature(m, f, &t, &fib).unwrap();
    (b, t, c)
}

#[test]
fn unit_volume_homogeneous_inputs_are_fixed() {
    for k in [1, 2] {
        let m = mesh(k, 16);
        let f = pullback_homogeneous(&unit_volume(k), &m);
        let (out, rep) = round(&f, &gamma(k), &RoundOptions::default()).unwrap();
        assert!(out.max_rel_diff(&f) < 1e-10, "{}", out.max_rel_diff(&f));
        assert!((rep.assembly.volume - 1.0).abs() < 1e-12);
        assert!(rep.local_nil.curvature_pattern_defect < 1e-8);
    }
}

#[test]
fn other_homogeneous_inputs_land_on_the_unit_volume_metric() {
    let m = mesh(1, 16);
    let target = pullback_homogeneous(&unit_volume(1), &m);
    for g in [LeftInvariantMetric::diagonal(2.0, 2.0, 0.5).unwrap(), LeftInvariantMetric::diagonal(3.0, 3.0, 9.0).unwrap()] {
        let (out, _) = round(&pullback_homogeneous(&g, &m), &gamma(1), &RoundOptions::default()).unwrap();
        assert!(out.max_rel_diff(&target) < 1e-10);
    }
}

#[test]
fn rounding_is_invariant_along_the_flow() {
    let m = mesh(1, 16);
    let f = pullback_homogeneous(&LeftInvariantMetric::diagonal(1.0, 1.5, 0.5).unwrap(), &m);
    let (evolved, _) = smooth(&m, &f, 0.2, &SmoothOptions::default()).unwrap();
    let opts = RoundOptions::default();
    let (a, _) = round(&f, &gamma(1), &opts).unwrap();
    let (b, _) = round(&evolved, &gamma(1), &opts).unwrap();
    assert!(b.max_rel_diff(&a) < 1e-10, "{}", b.max_rel_diff(&a));
}

#[test]
fn volume_scales_with_the_fourth_inverse_power() {
    let m = mesh(1, 8);
    let f = perturbed(&m, &pullback_homogeneous(&unit_volume(1), &m), 0.05, 5, 0.2).unwrap();
    let (b, t, c) = stages(&m, &f);
    let scales = [0.5, 1.0, 2.0];
    let vols: Vec<f64> = scales.iter().map(|&a| assemble(&m, &b, &t, &c, a).unwrap().volume(&m)).collect();
    let invariant: Vec<f64> = scales.iter().zip(&vols).map(|(a, v)| v * a.powi(4)).collect();
    for x in &invariant {
        assert!((x / invariant[0] - 1.0).abs() < 1e-8);
    }
    let slope = (vols[2].ln() - vols[0].ln()) / (scales[2].ln() - scales[0].ln());
    assert!((slope + 4.0).abs() < 0.01, "{slope}");
}

#[test]
fn perturbed_input_rounds_to_a_unit_volume_nil_metric() {
    let opts = RoundOptions::default();
    for k in [1, 2] {
        let m = mesh(k, 16);
        let f = perturbed(&m, &pullback_homogeneous(&unit_volume(k), &m), 0.05, 7, 0.15).unwrap();
        let (out, rep) = round(&f, &gamma(k), &opts).unwrap();
        assert_eq!(rep.harmonic.kernel.dimension, 2);
        let euler = rep.connection.total_curvature / (2.0 * PI * k as f64);
        assert!((euler + 1.0).abs() < 1e-3, "{euler}");
        assert!((rep.connection.total_curvature_prime - rep.connection.total_curvature).abs() < 1e-12);
        assert!((rep.assembly.volume - 1.0).abs() < 1e-6);
        assert!(rep.fibers.max_central_angle < 5.0);
        assert!(rep.local_nil.homothety_residual < 1e-10);
        assert!(rep.local_nil.curvature_pattern_defect < 0.5, "{}", rep.local_nil.curvature_pattern_defect);

        let (again, rep2) = round(&out, &gamma(k), &opts).unwrap();
        assert!(again.max_rel_diff(&out) < 2.0 * out.max_rel_diff(&f));
        assert!(rep2.local_nil.curvature_pattern_defect < rep.local_nil.curvature_pattern_defect);
    }
}

#[test]
fn lattice_mismatch_is_reported_at_the_mesh_stage() {
    let err = round(&pullback_homogeneous(&unit_volume(2), &mesh(2, 8)), &gamma(1), &RoundOptions::default()).unwrap_err();
    assert!(err.to_string().contains("mesh"), "{err}");
}
