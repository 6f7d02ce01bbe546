use nalgebra::{Matrix3, Vector3};
use nil_core::{coframe, NilAffineMap, NilAutomorphism, NilPoint};
use nil_develop::{develop, find_frame, verify_local_nil, DevelopError, MetricPatch, NilFrame, Orientation};

/// A chart `ψ` of Nil on the box, with its Jacobian.
trait Chart {
    fn map(&self, y: [f64; 3]) -> Vector3<f64>;
    fn jacobian(&self, y: [f64; 3]) -> Matrix3<f64>;
}

/// `y ↦ A(y + (0.1 sin y2, 0.1 y1², 0.2 y1 y2))` for an affine map `A` of Nil.
struct Bent(NilAffineMap);

impl Chart for Bent {
    fn map(&self, y: [f64; 3]) -> Vector3<f64> {
        let p = NilPoint::new(y[0] + 0.1 * y[1].sin(), y[1] + 0.1 * y[0] * y[0], y[2] + 0.2 * y[0] * y[1]);
        self.0.apply(&p).to_vector()
    }

    fn jacobian(&self, y: [f64; 3]) -> Matrix3<f64> {
        let p = NilPoint::new(y[0] + 0.1 * y[1].sin(), y[1] + 0.1 * y[0] * y[0], y[2] + 0.2 * y[0] * y[1]);
        let inner = Matrix3::new(1.0, 0.1 * y[1].cos(), 0.0, 0.2 * y[0], 1.0, 0.0, 0.2 * y[1], 0.2 * y[0], 1.0);
        self.0.jacobian(&p) * inner
    }
}

/// `y ↦ A(y)`.
struct Affine(NilAffineMap);

impl Chart for Affine {
    fn map(&self, y: [f64; 3]) -> Vector3<f64> {
        self.0.apply(&NilPoint::new(y[0], y[1], y[2])).to_vector()
    }

    fn jacobian(&self, y: [f64; 3]) -> Matrix3<f64> {
        self.0.jacobian(&NilPoint::new(y[0], y[1], y[2]))
    }
}

/// `ψ*(λ² g_Nil)` sampled on `[−1/2, 1/2]³` with `n` vertices per axis, marked at the centre.
fn patch(chart: &dyn Chart, lambda: f64, n: usize, orientation: Orientation) -> MetricPatch {
    let h = 1.0 / (n - 1) as f64;
    MetricPatch::from_fn([-0.5; 3], [h; 3], [n; 3], [n / 2; 3], orientation, |y| {
        let j = coframe(chart.map(y)[0]) * chart.jacobian(y);
        j.transpose() * j * (lambda * lambda)
    })
    .unwrap()
}

fn identity() -> NilAffineMap {
    NilAffineMap::IDENTITY
}

fn moved() -> NilAffineMap {
    NilAffineMap::new(NilPoint::new(0.3, -0.7, 1.1), NilAutomorphism::rotation(0.9))
}

#[test]
fn standard_metric_is_recognised_with_scale_one() {
    let p = patch(&Affine(identity()), 1.0, 9, Orientation::Positive);
    let (ok, lambda) = verify_local_nil(&p);
    assert!(ok);
    assert!((lambda - 1.0).abs() < 1e-10, "{lambda}");
}

#[test]
fn scale_is_read_from_the_curvature() {
    for n in [9, 17] {
        let p = patch(&Bent(identity()), 3.0, n, Orientation::Positive);
        let (ok, lambda) = verify_local_nil(&p);
        assert!(ok);
        assert!((lambda - 3.0).abs() < 0.02, "{lambda}");
    }
}

#[test]
fn euclidean_and_round_metrics_are_rejected() {
    let flat = MetricPatch::from_fn([0.0; 3], [0.1; 3], [9; 3], [4; 3], Orientation::Positive, |_| Matrix3::identity()).unwrap();
    assert!(!verify_local_nil(&flat).0);
    let sphere = MetricPatch::from_fn([0.0; 3], [0.1; 3], [9; 3], [4; 3], Orientation::Positive, |y| {
        let r2: f64 = y.iter().map(|x| x * x).sum();
        Matrix3::identity() * (4.0 / (1.0 + r2).powi(2))
    })
    .unwrap();
    assert!(!verify_local_nil(&sphere).0);
    assert!(matches!(find_frame(&sphere), Err(DevelopError::NotLocallyNil { .. })));
}

#[test]
fn central_direction_of_the_standard_metric() {
    let p = patch(&Affine(identity()), 1.0, 9, Orientation::Positive);
    let frame = find_frame(&p).unwrap();
    assert!((frame.f[2] - Vector3::z()).amax() < 1e-10, "{:?}", frame.f[2]);
    let g = p.values()[p.marked_index()];
    let gram = frame.matrix().transpose() * g * frame.matrix();
    assert!((gram - Matrix3::identity()).amax() < 1e-12);
    assert!(frame.matrix().determinant() > 0.0);
}

/// X-frame components of `dψ f_i` at the marked point, scaled by `λ`.
fn frame_image(chart: &dyn Chart, p: &MetricPatch, frame: &NilFrame) -> Matrix3<f64> {
    let y = p.point(p.marked_index());
    coframe(chart.map(y)[0]) * chart.jacobian(y) * frame.matrix() * frame.lambda
}

#[test]
fn central_direction_is_equivariant() {
    let p = patch(&Bent(moved()), 1.0, 13, Orientation::Positive);
    let frame = find_frame(&p).unwrap();
    let w = frame_image(&Bent(moved()), &p, &frame);
    // dψ f3 is the unit central vector, and dψ f1, dψ f2 span the plane.
    assert!((w.column(2) - Vector3::z()).amax() < 1e-3, "{w}");
    assert!((w.transpose() * w - Matrix3::identity()).amax() < 1e-3, "{w}");
}

/// The isometry `A` of Nil with `A ∘ ψ = F` implied by the frames at the marked point.
fn implied_isometry(chart: &dyn Chart, p: &MetricPatch, frame: &NilFrame) -> NilAffineMap {
    let w = frame_image(chart, p, frame);
    let d = NilAutomorphism::from_matrix_with_tol(w.try_inverse().unwrap(), 1e-2).unwrap();
    let start = NilPoint::from_vector(&chart.map(p.point(p.marked_index())));
    NilAffineMap::new(NilPoint::IDENTITY, d).compose(&NilAffineMap::translation(start.inv()))
}

fn recovery_error(chart: &dyn Chart, lambda: f64, n: usize) -> (f64, f64) {
    let p = patch(chart, lambda, n, Orientation::Positive);
    let frame = find_frame(&p).unwrap();
    let dev = develop(&p, &frame).unwrap();
    let a = implied_isometry(chart, &p, &frame);
    let err = (0..p.num_vertices())
        .map(|v| a.apply(&NilPoint::from_vector(&chart.map(p.point(v)))).max_abs_diff(&dev.points[v]))
        .fold(0.0, f64::max);
    (err, dev.metric_residual)
}

#[test]
fn left_translations_are_recovered_up_to_isometry() {
    let q = NilAffineMap::translation(NilPoint::new(0.4, 0.2, -0.3));
    let (err, residual) = recovery_error(&Affine(q), 1.0, 9);
    assert!(err < 1e-3, "{err}");
    assert!(residual < 1e-3, "{residual}");
}

#[test]
fn bent_charts_are_recovered_at_second_order() {
    let chart = Bent(moved());
    let levels: Vec<(f64, f64)> = [9, 17, 33].iter().map(|&n| recovery_error(&chart, 1.0, n)).collect();
    for pair in levels.windows(2) {
        let order = (pair[0].1 / pair[1].1).log2();
        assert!((order - 2.0).abs() <= 0.5, "residual order {order} from {levels:?}");
        assert!(pair[1].0 < pair[0].0, "{levels:?}");
    }
}

#[test]
fn orientation_reversing_charts_need_the_reversed_orientation() {
    struct Flipped;
    impl Chart for Flipped {
        fn map(&self, y: [f64; 3]) -> Vector3<f64> {
            Vector3::new(y[0], y[1], -y[2])
        }
        fn jacobian(&self, _: [f64; 3]) -> Matrix3<f64> {
            Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0))
        }
    }
    let p = patch(&Flipped, 1.0, 9, Orientation::Positive);
    assert!(matches!(find_frame(&p), Err(DevelopError::OrientationMismatch)));
    let p = patch(&Flipped, 1.0, 9, Orientation::Negative);
    let frame = find_frame(&p).unwrap();
    let dev = develop(&p, &frame).unwrap();
    assert!(dev.metric_residual < 1e-3);
}

#[test]
fn development_is_deterministic() {
    let p = patch(&Bent(moved()), 2.0, 9, Orientation::Positive);
    let frame = find_frame(&p).unwrap();
    let a = develop(&p, &frame).unwrap();
    let b = develop(&p, &frame).unwrap();
    assert_eq!(a.to_csv(&p), b.to_csv(&p));
    assert!(a.points.iter().zip(&b.points).all(|(x, y)| x == y));
}
