use nalgebra::Matrix3;
use nil_core::LeftInvariantMetric;
use nil_lattice::{default_catalog, Lattice};

/// Collapsed initial metrics paired with the shipped lattices.
///
/// Every pair has almost-flat ratio below 0.01. Metrics on lattices with a nontrivial
/// point group are rotation invariant so that they descend to the quotient.
pub fn catalog_initial_metrics() -> Vec<(LeftInvariantMetric, Lattice)> {
    let mut out = Vec::new();
    for lattice in default_catalog() {
        let g = LeftInvariantMetric::diagonal(1.0, 1.0, 0.02).expect("SPD");
        out.push((g, lattice));
    }
    let skew = Matrix3::new(1.0, 0.2, 0.01, 0.2, 1.5, 0.005, 0.01, 0.005, 0.02);
    out.push((LeftInvariantMetric::new(skew).expect("SPD"), nil_lattice::gamma(1)));
    let oblong = LeftInvariantMetric::diagonal(2.0, 0.5, 0.01).expect("SPD");
    out.push((oblong, nil_lattice::gamma(3)));
    out
}
