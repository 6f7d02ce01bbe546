//! The full rounding pipeline with a stage-by-stage report.

use nalgebra::{Matrix2, Matrix3};
use nil_core::{homothety_decompose, LeftInvariantMetric};
use nil_lattice::Lattice;
use serde::Serialize;

use crate::assemble::{assemble_and_normalize, Assembly};
use crate::connection::connection_and_curvature;
use crate::curvature::discrete_curvature;
use crate::dec::{harmonic_one_forms, KernelCheck};
use crate::error::{Result, RoundingError};
use crate::fibration::{central_angle, fiber_extraction};
use crate::field::MetricField;
use crate::mesh::{build_mesh, MeshedNilmanifold};
use crate::smooth::{smooth, SmoothOptions, SmoothReport};
use crate::torus::{build_torus, period_map};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundOptions {
    /// Smoothing time after scaling to `sup |Rm| = 1`.
    pub tau: f64,
    pub smooth: SmoothOptions,
    pub basepoint: usize,
}

impl Default for RoundOptions {
    fn default() -> Self {
        Self { tau: 0.01, smooth: SmoothOptions::default(), basepoint: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicSummary {
    pub gram: Matrix2<f64>,
    pub cg_iterations: [usize; 2],
    pub kernel: KernelCheck,
}

#[derive(Debug, Clone, Serialize)]
pub struct TorusSummary {
    pub periods: Matrix2<f64>,
    pub metric: Matrix2<f64>,
    pub area: f64,
    pub path_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberSummary {
    pub min_length: f64,
    pub max_length: f64,
    pub min_rank_ratio: f64,
    pub max_closing_gap: f64,
    /// Largest angle between `V` and `∂3`, degrees.
    pub max_central_angle: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConnectionSummary {
    pub total_curvature: f64,
    pub total_curvature_prime: f64,
    pub max_correction: f64,
    pub poisson_iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalNilCheck {
    /// Frame average of the output.
    pub average: Matrix3<f64>,
    /// Largest entry deviation of any vertex from the average.
    pub max_deviation: f64,
    pub homothety_scale: f64,
    pub homothety_residual: f64,
    /// Largest relative departure of the curvature operator from the Nil pattern
    /// `(−3c, c, c)` over all vertices.
    pub curvature_pattern_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub lattice: String,
    pub k: usize,
    pub resolution: [usize; 3],
    pub input_sup_rm: f64,
    /// Factor applied to reach `sup |Rm| = 1`.
    pub curvature_scale: f64,
    pub smoothing: SmoothReport,
    pub harmonic: HarmonicSummary,
    pub torus: TorusSummary,
    pub fibers: FiberSummary,
    pub connection: ConnectionSummary,
    pub assembly: Assembly,
    pub local_nil: LocalNilCheck,
}

/// Mesh of a field, checked against the lattice it is rounded for.
pub fn mesh_for(f: &MetricField, lattice: &Lattice) -> Result<MeshedNilmanifold> {
    let mesh = build_mesh(lattice, f.n)?;
    if mesh.k() != f.k {
        return Err(RoundingError::Mismatch(format!("field is for k = {}, lattice {} has k = {}", f.k, lattice.label, mesh.k())));
    }
    Ok(mesh)
}

pub fn round(f: &MetricField, lattice: &Lattice, opts: &RoundOptions) -> Result<(MetricField, RoundReport)> {
    let mesh = mesh_for(f, lattice).map_err(|e| e.at("mesh"))?;
    let curv = discrete_curvature(&mesh, f).map_err(|e| e.at("normalize"))?;
    if !(curv.sup_rm > 0.0) {
        return Err(RoundingError::InvalidArgument("input is flat".into()).at("normalize"));
    }
    let scaled = f.scaled(curv.sup_rm).map_err(|e| e.at("normalize"))?;
    let (smoothed, smoothing) = smooth(&mesh, &scaled, opts.tau, &opts.smooth).map_err(|e| e.at("smooth"))?;
    let basis = harmonic_one_forms(&mesh, &smoothed).map_err(|e| e.at("harmonic"))?;
    let torus = build_torus(&basis, &mesh).map_err(|e| e.at("torus"))?;
    let phi = period_map(&mesh, &basis, &torus, opts.basepoint).map_err(|e| e.at("period map"))?;
    let path_defect = phi.path_defect;
    let fib = fiber_extraction(&mesh, &smoothed, &basis, &torus, phi).map_err(|e| e.at("fibers"))?;
    let conn = connection_and_curvature(&mesh, &smoothed, &torus, &fib).map_err(|e| e.at("connection"))?;
    let (out, assembly) = assemble_and_normalize(&mesh, &basis, &torus, &conn, 1).map_err(|e| e.at("assemble"))?;
    let local_nil = local_nil_check(&mesh, &out).map_err(|e| e.at("verify"))?;

    let max_central_angle = (0..mesh.num_vertices())
        .map(|v| central_angle(&fib.field[v], &smoothed.values()[v]))
        .fold(0.0, f64::max);
    let report = RoundReport {
        lattice: lattice.label.clone(),
        k: mesh.k(),
        resolution: mesh.resolution(),
        input_sup_rm: curv.sup_rm,
        curvature_scale: curv.sup_rm,
        smoothing,
        harmonic: HarmonicSummary { gram: basis.gram, cg_iterations: basis.cg_iterations, kernel: basis.kernel.clone() },
        torus: TorusSummary { periods: torus.periods, metric: torus.metric, area: torus.area, path_defect },
        fibers: FiberSummary {
            min_length: fib.length.iter().copied().fold(f64::INFINITY, f64::min),
            max_length: fib.length.iter().copied().fold(0.0, f64::max),
            min_rank_ratio: fib.min_rank_ratio,
            max_closing_gap: fib.max_closing_gap,
            max_central_angle,
        },
        connection: ConnectionSummary {
            total_curvature: conn.total_curvature,
            total_curvature_prime: conn.total_curvature_prime,
            max_correction: conn.theta_bar.iter().fold(0.0, |m: f64, x| m.max(x.abs())),
            poisson_iterations: conn.poisson_iterations,
        },
        assembly,
        local_nil,
    };
    Ok((out, report))
}

/// Homothety decomposition of the frame average and the spread around it.
pub fn local_nil_check(mesh: &MeshedNilmanifold, f: &MetricField) -> Result<LocalNilCheck> {
    let frame = f.frame_values(mesh);
    let average = f.frame_average(mesh);
    let max_deviation = frame.iter().map(|g| (g - average).amax()).fold(0.0, f64::max);
    let g = LeftInvariantMetric::new(average)?;
    let h = homothety_decompose(&g)?;
    let curvature_pattern_defect = discrete_curvature(mesh, f)?.vertices.iter().map(|c| nil_pattern_defect(c.operator_eigenvalues)).fold(0.0, f64::max);
    Ok(LocalNilCheck { average, max_deviation, homothety_scale: h.lambda, homothety_residual: h.residual(&g), curvature_pattern_defect })
}

/// How far ascending eigenvalues are from `(−3c, c, c)`, relative to the largest one.
pub fn nil_pattern_defect(ev: [f64; 3]) -> f64 {
    let c = (ev[1] + ev[2] - ev[0] / 3.0) / 3.0;
    let target = [-3.0 * c, c, c];
    let scale = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    (0..3).map(|i| (ev[i] - target[i]).abs()).fold(0.0, f64::max) / scale
}
