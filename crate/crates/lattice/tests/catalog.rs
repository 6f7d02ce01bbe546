use nalgebra::Matrix2;
use nil_core::{LeftInvariantMetric, NilAffineMap, NilAutomorphism, NilPoint};
use nil_lattice::*;

const R: usize = DEFAULT_RADIUS;

#[test]
fn every_catalog_entry_is_valid() {
    for lattice in default_catalog() {
        let report = validate_lattice(&lattice, R);
        assert!(report.is_valid(), "{}: {:?}", lattice.label, report.violations);
    }
}

#[test]
fn covering_orders_match_point_groups() {
    let expected = [1, 1, 1, 1, 2, 3, 4, 6];
    for (lattice, n) in default_catalog().iter().zip(expected) {
        let (sub, index) = translation_subgroup(lattice, R).unwrap();
        assert_eq!(index, n, "{}", lattice.label);
        assert_eq!(validate_lattice(lattice, R).point_group_order, n);
        assert!(sub.generators().iter().all(|g| g.is_translation(1e-12)));
        assert!(validate_lattice(&sub, R).is_valid());
    }
}

#[test]
fn base_orbifolds_and_haken_flags() {
    let expected = [
        ("Gamma1", "torus", false),
        ("Gamma4", "torus", false),
        ("Z2", "S2(2,2,2,2)", false),
        ("Z3", "S2(3,3,3)", true),
        ("Z4", "S2(2,4,4)", true),
        ("Z6", "S2(2,3,6)", true),
    ];
    let catalog = default_catalog();
    for (label, base, non_haken) in expected {
        let lattice = catalog.iter().find(|l| l.label == label).unwrap();
        let b = base_orbifold(lattice, R).unwrap();
        assert_eq!(b.name(), base, "{label}");
        assert_eq!(is_non_haken(lattice, R).unwrap(), non_haken, "{label}");
        if b.kind == BaseKind::SphereWithConePoints {
            assert!((b.cone_defect() - 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn fixed_point_rotation_is_rejected() {
    let rot = NilAffineMap::automorphism(NilAutomorphism::rotation(std::f64::consts::FRAC_PI_2));
    let mut gens = gamma(1).generators().to_vec();
    gens.push(rot);
    let lattice = Lattice::new("bad", gens).unwrap();
    let report = validate_lattice(&lattice, 3);
    assert!(!report.free);
    assert_eq!(report.violations[0].kind, ViolationKind::NotFree);
    assert_eq!(report.violations[0].word, "g4");
}

#[test]
fn non_isometric_generator_is_rejected() {
    let carnot = NilAffineMap::automorphism(NilAutomorphism::carnot(2.0));
    assert!(matches!(Lattice::new("bad", vec![carnot]), Err(LatticeError::NotIsometry { index: 0 })));
}

#[test]
fn accumulating_generators_are_not_discrete() {
    let tiny = NilAffineMap::translation(NilPoint::new(1e-8, 0.0, 0.0));
    let lattice = Lattice::new("dense", vec![tiny]).unwrap();
    assert!(!validate_lattice(&lattice, 2).discrete);
}

#[test]
fn quotient_volumes() {
    let g1 = gamma(1);
    let std = LeftInvariantMetric::standard();
    assert!((quotient_volume(&g1, &std, R).unwrap() - 1.0).abs() < 1e-12);
    let big = LeftInvariantMetric::diagonal(4.0, 4.0, 16.0).unwrap();
    assert!((quotient_volume(&g1, &big, R).unwrap() - 16.0).abs() < 1e-12);
    let z4 = point_group_extension(4);
    let (sub, index) = translation_subgroup(&z4, R).unwrap();
    let ratio = quotient_volume(&sub, &std, R).unwrap() / quotient_volume(&z4, &std, R).unwrap();
    assert!((ratio - index as f64).abs() < 1e-12);
    // Closed form s·u·w·√det G for a rectangular translation lattice.
    let lat = Lattice::new(
        "rect",
        vec![
            NilAffineMap::translation(NilPoint::new(2.0, 0.0, 0.0)),
            NilAffineMap::translation(NilPoint::new(0.0, 3.0, 0.0)),
            NilAffineMap::translation(NilPoint::central(0.5)),
        ],
    )
    .unwrap();
    let g = LeftInvariantMetric::diagonal(1.0, 2.0, 3.0).unwrap();
    assert!((quotient_volume(&lat, &g, R).unwrap() - 2.0 * 3.0 * 0.5 * 6f64.sqrt()).abs() < 1e-12);
}

#[test]
fn volume_is_multiplicative_for_subgroups() {
    let std = LeftInvariantMetric::standard();
    let sub = Lattice::new(
        "index6",
        vec![
            NilAffineMap::translation(NilPoint::new(2.0, 0.0, 0.0)),
            NilAffineMap::translation(NilPoint::new(0.0, 3.0, 0.0)),
            NilAffineMap::translation(NilPoint::central(1.0)),
        ],
    )
    .unwrap();
    let v = quotient_volume(&sub, &std, R).unwrap() / quotient_volume(&gamma(1), &std, R).unwrap();
    assert!((v - 6.0).abs() < 1e-12);
}

#[test]
fn unit_volume_normalization() {
    let g1 = gamma(1);
    let std = LeftInvariantMetric::standard();
    let same = normalize_unit_volume(&g1, &std, R).unwrap();
    assert_eq!(same.dilation, 1.0);
    let big = LeftInvariantMetric::diagonal(4.0, 4.0, 16.0).unwrap();
    let n = normalize_unit_volume(&g1, &big, R).unwrap();
    assert!((n.dilation - 0.5).abs() < 1e-14);
    assert!((quotient_volume(&n.lattice, &n.metric, R).unwrap() - 1.0).abs() < 1e-12);
    let twice = normalize_unit_volume(&n.lattice, &n.metric, R).unwrap();
    assert!((twice.dilation - 1.0).abs() < 1e-12);
    for lattice in default_catalog() {
        let n = normalize_unit_volume(&lattice, &big, R).unwrap();
        assert!((quotient_volume(&n.lattice, &big, R).unwrap() - 1.0).abs() < 1e-12, "{}", lattice.label);
    }
}

#[test]
fn carnot_conjugation_scales_volume_quartically() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(7);
    let std = LeftInvariantMetric::standard();
    for lattice in default_catalog() {
        let base = quotient_volume(&lattice, &std, R).unwrap();
        let lam: f64 = rng.gen_range(0.3..3.0);
        let v = quotient_volume(&lattice.dilated(lam).unwrap(), &std, R).unwrap();
        assert!((v / base - lam.powi(4)).abs() < 1e-10 * lam.powi(4), "{}", lattice.label);
    }
}

#[test]
fn conjugacy_reports() {
    let g1 = gamma(1);
    let id = check_conjugacy(&g1, &g1, &NilAffineMap::IDENTITY, R).unwrap();
    assert!(id.conjugate && id.isometric && id.lambda == 1.0);

    let delta = NilAffineMap::automorphism(NilAutomorphism::carnot(2.0));
    let g2 = g1.conjugated(&delta, "dilated").unwrap();
    let r = check_conjugacy(&g1, &g2, &delta, R).unwrap();
    assert!(r.conjugate && r.conformal);
    assert!((r.lambda - 2.0).abs() < 1e-14);
    assert!((r.det - 16.0).abs() < 1e-12);
    assert!((r.volume_ratio - r.lambda.powi(4)).abs() < 1e-10);
    assert!(!r.equal_volumes && !r.isometric);

    let z4 = point_group_extension(4);
    let r = check_conjugacy(&g1, &z4, &NilAffineMap::IDENTITY, R).unwrap();
    assert!(!r.conjugate);
    assert_eq!(r.failure.as_deref(), Some("Γ2:g3"));
}

#[test]
fn haken_flag_is_conjugation_invariant() {
    let maps = [
        NilAffineMap::new(NilPoint::new(0.3, -0.7, 1.1), NilAutomorphism::rotation(0.7)),
        NilAffineMap::automorphism(NilAutomorphism::carnot(1.7)),
        NilAffineMap::automorphism(NilAutomorphism::block(Matrix2::new(1.0, 0.0, 0.0, -1.0)).unwrap()),
    ];
    for lattice in default_catalog() {
        for psi in &maps {
            let c = lattice.conjugated(psi, "c").unwrap();
            assert_eq!(is_non_haken(&c, R).unwrap(), is_non_haken(&lattice, R).unwrap(), "{}", lattice.label);
        }
    }
}

#[test]
fn catalog_json_roundtrip() {
    let catalog = default_catalog();
    let json = catalog_to_json(&catalog).unwrap();
    let back = catalog_from_json(&json).unwrap();
    assert_eq!(back, catalog);
    let bad = r#"[{"label":"x","generators":[{"translation":{"x1":0,"x2":0,"x3":0},"automorphism":{"matrix":[2,0,0,0,2,0,0,0,4]}}]}]"#;
    assert!(catalog_from_json(bad).is_err());
}
