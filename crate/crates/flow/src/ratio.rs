use nil_core::{sup_rm, LeftInvariantMetric, StructureConstants};
use nil_lattice::{diameter, DiameterOptions, Lattice};
use rayon::prelude::*;

use crate::error::Result;
use crate::integrate::FlowTrajectory;

/// `sup|Rm| · diam²` of `(Nil/Γ, G)`.
pub fn almost_flat_ratio(g: &LeftInvariantMetric, lattice: &Lattice, opts: &DiameterOptions) -> Result<f64> {
    let d = diameter(lattice, g, opts)?.value;
    Ok(sup_rm(g) * d * d)
}

/// The ratio with the curvature of another Lie algebra structure on the same metric.
pub fn almost_flat_ratio_with(
    alg: &StructureConstants,
    g: &LeftInvariantMetric,
    lattice: &Lattice,
    opts: &DiameterOptions,
) -> Result<f64> {
    let k = nil_core::curvature_with(alg, g.gram())?.sup_norm;
    if k == 0.0 {
        return Ok(0.0);
    }
    let d = diameter(lattice, g, opts)?.value;
    Ok(k * d * d)
}

impl FlowTrajectory {
    /// Computes the almost-flat ratio at every state, in parallel.
    pub fn attach_lattice(&mut self, lattice: &Lattice, opts: &DiameterOptions) -> Result<()> {
        let ratios: Result<Vec<f64>> =
            self.states.par_iter().map(|s| almost_flat_ratio(&s.g, lattice, opts)).collect();
        self.ratio = Some(ratios?);
        Ok(())
    }
}
