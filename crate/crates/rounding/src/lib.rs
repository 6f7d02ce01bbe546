//! Discretized nilmanifolds and the rounding of almost-flat metrics to Nil structures.

pub mod assemble;
pub mod connection;
pub mod curvature;
pub mod dec;
pub mod error;
pub mod fd;
pub mod fibration;
pub mod field;
pub mod mesh;
pub mod round;
pub mod smooth;
pub mod torus;

pub use curvature::{discrete_curvature, point_curvature, Connection, DiscreteCurvature, PointCurvature};
pub use error::{Result, RoundingError};
pub use fd::{jet_from_samples, mesh_jet, mesh_jets, Jet};
pub use field::{perturbed, pullback_homogeneous, to_coordinate, to_frame, MetricField};
pub use mesh::{build_mesh, MeshedNilmanifold, Reduced, MIN_RESOLUTION};
pub use smooth::{deturck_rhs, deviation_energy, smooth, SmoothOptions, SmoothReport};
pub use dec::{coordinate_forms, harmonic_one_forms, HarmonicBasis, Hodge, KernelCheck};
pub use torus::{build_torus, loop_integral, period_map, period_map_ordered, PeriodMap, TorusData};
pub use fibration::{central_angle, fiber_extraction, Fiber, FiberWalker, FibrationData};
pub use connection::{base_curvature, connection_and_curvature, integrate_covectors, ConnectionData};
pub use assemble::{assemble, assemble_and_normalize, Assembly};
pub use round::{local_nil_check, mesh_for, nil_pattern_defect, round, LocalNilCheck, RoundOptions, RoundReport};
