//! Lattices in `Isom(Nil)`, their quotient nilmanifolds and base orbifolds.

pub mod catalog;
pub mod diameter;
pub mod error;
pub mod lattice;
pub mod orbifold;
pub mod structure;
pub mod volume;

pub use catalog::{catalog_from_json, catalog_to_json, default_catalog, gamma, point_group_extension};
pub use diameter::{diameter, DiameterEstimate, DiameterOptions};
pub use error::{LatticeError, Result};
pub use lattice::{planar_lift, BallElement, NearCoincidence, Lattice, Word, WordBall, DEFAULT_RADIUS, ISOMETRY_TOL};
pub use orbifold::{base_from_structure, base_orbifold, is_non_haken, BaseKind, FlatOrbifoldBase};
pub use structure::{
    fixes_a_point, translation_subgroup, validate_lattice, LatticeStructure, TranslationData, ValidationReport,
    Violation, ViolationKind,
};
pub use volume::{check_conjugacy, normalize_unit_volume, quotient_volume, ConjugacyReport, UnitVolume};
