use nalgebra::Matrix3;
use nil_core::{sup_rm, LeftInvariantMetric, NilAffineMap, NilAutomorphism, NilPoint};
use nil_flow::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_diagonal(rng: &mut ChaCha8Rng) -> LeftInvariantMetric {
    LeftInvariantMetric::diagonal(rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0), rng.gen_range(0.1..10.0)).unwrap()
}

fn rel_err(a: &LeftInvariantMetric, b: &LeftInvariantMetric) -> f64 {
    a.max_abs_diff(b) / b.gram().amax()
}

#[test]
fn integrator_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let g0 = random_diagonal(&mut rng);
        for strategy in [Strategy::Homothety, Strategy::Direct] {
            let traj = integrate_with(&g0, 100.0, DEFAULT_TOL, strategy).unwrap();
            let mut worst: f64 = 0.0;
            for s in &traj.states {
                worst = worst.max(rel_err(&s.g, &closed_form_diagonal(&g0, s.t).unwrap()));
            }
            assert!(worst <= 1e-8, "{strategy:?}: {worst:e}");
        }
    }
}

#[test]
fn reduced_quantity_is_exact_along_trajectories() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20 {
        let g0 = random_diagonal(&mut rng);
        let u0 = twist_ratio(&g0);
        let traj = integrate_with(&g0, 100.0, DEFAULT_TOL, Strategy::Direct).unwrap();
        for s in &traj.states {
            let defect = twist_ratio(&s.g) * (1.0 + 3.0 * u0 * s.t) / u0 - 1.0;
            assert!(defect.abs() <= 1e-10, "t = {}: {defect:e}", s.t);
        }
    }
}

#[test]
fn standard_metric_at_time_two() {
    let g = integrate(&LeftInvariantMetric::standard(), 2.0, DEFAULT_TOL).unwrap().final_metric();
    let expected = LeftInvariantMetric::diagonal(7f64.cbrt(), 7f64.cbrt(), 1.0 / 7f64.cbrt()).unwrap();
    assert!(g.max_abs_diff(&expected) < 1e-8);
    assert!((g.gram()[(0, 0)] - 1.9129).abs() < 1e-4 && (g.gram()[(2, 2)] - 0.52276).abs() < 1e-5);
}

#[test]
fn monotone_volume_growth_and_fibre_decay() {
    let traj = integrate(&LeftInvariantMetric::standard(), 50.0, DEFAULT_TOL).unwrap();
    for w in traj.states.windows(2) {
        assert!(w[1].g.determinant() > w[0].g.determinant());
        assert!(w[1].g.gram()[(2, 2)] < w[0].g.gram()[(2, 2)]);
        assert!(w[1].g.gram()[(0, 0)] > w[0].g.gram()[(0, 0)]);
    }
}

#[test]
fn curvature_decays_like_inverse_time() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let g0 = random_diagonal(&mut rng);
        let traj = integrate(&g0, 1e4, DEFAULT_TOL).unwrap();
        // K = 3u/4 and u(t) ~ 1/(3t), so t K(t) -> 1/4.
        let tk: Vec<f64> = traj.states.iter().map(|s| s.t * sup_rm(&s.g)).collect();
        assert!(tk.iter().all(|v| *v <= 0.25 + 1e-9));
        assert!((tk.last().unwrap() - 0.25).abs() < 0.25 / (3e4 * twist_ratio(&g0)) + 1e-9);
    }
}

#[test]
fn isometric_equivariance() {
    let g0 = LeftInvariantMetric::new(Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5)).unwrap();
    let phi = NilAffineMap::new(NilPoint::new(0.5, 1.0, -2.0), NilAutomorphism::rotation(0.8));
    let a = integrate(&phi.push_metric(&g0), 10.0, DEFAULT_TOL).unwrap().final_metric();
    let b = phi.push_metric(&integrate(&g0, 10.0, DEFAULT_TOL).unwrap().final_metric());
    assert!(rel_err(&a, &b) < 1e-8);
}

#[test]
fn strategies_agree_on_general_metrics() {
    let g0 = LeftInvariantMetric::new(Matrix3::new(2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5)).unwrap();
    let a = integrate_with(&g0, 20.0, DEFAULT_TOL, Strategy::Homothety).unwrap();
    let b = integrate_with(&g0, 20.0, DEFAULT_TOL, Strategy::Direct).unwrap();
    assert!(rel_err(&a.final_metric(), &b.final_metric()) < 1e-8);
    for t in [0.3, 1.7, 9.9] {
        assert!(rel_err(&a.at(t), &b.at(t)) < 1e-7, "t = {t}");
    }
}

#[test]
fn dense_output_is_accurate() {
    let g0 = LeftInvariantMetric::diagonal(1.0, 2.0, 3.0).unwrap();
    let traj = integrate(&g0, 30.0, DEFAULT_TOL).unwrap();
    for i in 0..100 {
        let t = 0.3 * i as f64 + 0.01;
        assert!(rel_err(&traj.at(t), &closed_form_diagonal(&g0, t).unwrap()) < 1e-6, "t = {t}");
    }
}

#[test]
fn invalid_arguments() {
    let g = LeftInvariantMetric::standard();
    assert!(integrate(&g, 0.0, 1e-10).is_err());
    assert!(integrate(&g, 1.0, 0.0).is_err());
}

#[test]
fn csv_layout() {
    let traj = integrate(&LeftInvariantMetric::standard(), 1.0, 1e-8).unwrap();
    let csv = traj.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,g11,g12,g13,g22,g23,g33,sup_rm,ratio");
    assert_eq!(lines.count(), traj.states.len());
}

#[test]
fn claim_constants_for_standard_metric() {
    // Normalized G0 = (3/4) I has u0 = 4/3, so K_t = 1/(1 + 4t) and the bilinear
    // quantity in the growing directions is (1 + 4t)^{-2/3}: A' = (64 - 1)/4.
    let c = claim_constants(&LeftInvariantMetric::standard(), DEFAULT_TOL).unwrap();
    assert!((c.c_prime - 1.0).abs() < 1e-12);
    assert!((c.a_prime - 15.75).abs() < 1e-6, "{}", c.a_prime);
    assert!((c.curvature_time - 1.75).abs() < 1e-6);
    assert!((c.normalization - 0.75).abs() < 1e-14);
}

#[test]
fn claim_constants_are_universal() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..5 {
        let c = claim_constants(&random_diagonal(&mut rng), DEFAULT_TOL).unwrap();
        assert!(c.c_prime >= 1.0 - 1e-12);
        assert!((c.a_prime - 15.75).abs() < 1e-5, "{}", c.a_prime);
    }
}
