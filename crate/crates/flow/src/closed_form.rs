use nil_core::LeftInvariantMetric;

use crate::error::{FlowError, Result};

/// Exact solution from a diagonal initial metric.
///
/// With `u = C/(AB)` the flow reads `A' = Au`, `B' = Bu`, `C' = -Cu`, hence
/// `u' = u(C'/C - A'/A - B'/B) = -3u²` and `u(t) = u0/(1 + 3u0 t)`. Integrating
/// `(log A)' = u` gives the factor `(1 + 3u0 t)^{1/3}`, and `C` gets its inverse.
pub fn closed_form_diagonal(g0: &LeftInvariantMetric, t: f64) -> Result<LeftInvariantMetric> {
    let g = g0.gram();
    let off = g[(0, 1)].abs().max(g[(0, 2)].abs()).max(g[(1, 2)].abs());
    if off != 0.0 {
        return Err(FlowError::InvalidArgument("initial metric is not diagonal".into()));
    }
    let (a, b, c) = (g[(0, 0)], g[(1, 1)], g[(2, 2)]);
    let s = 1.0 + 3.0 * (c / (a * b)) * t;
    if s <= 0.0 {
        return Err(FlowError::InvalidArgument(format!("time {t} precedes the singular time")));
    }
    let f = s.cbrt();
    Ok(LeftInvariantMetric::diagonal(a * f, b * f, c / f)?)
}

/// `u = G33 / (G11 G22)` for a diagonal metric.
pub fn twist_ratio(g: &LeftInvariantMetric) -> f64 {
    let m = g.gram();
    m[(2, 2)] / (m[(0, 0)] * m[(1, 1)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_time_two() {
        let g = closed_form_diagonal(&LeftInvariantMetric::standard(), 2.0).unwrap();
        let c = 7f64.cbrt();
        assert!((g.gram()[(0, 0)] - c).abs() < 1e-15);
        assert!((g.gram()[(2, 2)] - 1.0 / c).abs() < 1e-15);
    }

    #[test]
    fn time_zero_is_identity_map() {
        let g0 = LeftInvariantMetric::diagonal(2.0, 3.0, 0.5).unwrap();
        assert_eq!(closed_form_diagonal(&g0, 0.0).unwrap(), g0);
    }

    #[test]
    fn rejects_off_diagonal() {
        let g = LeftInvariantMetric::new(nalgebra::Matrix3::new(1.0, 0.1, 0.0, 0.1, 1.0, 0.0, 0.0, 0.0, 1.0)).unwrap();
        assert!(closed_form_diagonal(&g, 1.0).is_err());
    }
}
