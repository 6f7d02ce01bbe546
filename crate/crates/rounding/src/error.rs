use nil_core::NilError;
use nil_lattice::LatticeError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error("resolution {0:?} too small or incompatible: {1}")]
    Resolution([usize; 3], String),
    #[error("unsupported lattice: {0}")]
    UnsupportedLattice(String),
    #[error("metric is not positive definite at vertex {vertex}")]
    NotPositiveDefinite { vertex: usize },
    #[error("time step {dt:e} exceeds the stability limit {limit:e}")]
    Cfl { dt: f64, limit: f64 },
    #[error("{solver} did not converge: residual {residual:e} after {iterations} iterations")]
    NoConvergence { solver: &'static str, residual: f64, iterations: usize },
    #[error("harmonic kernel has dimension {found}, expected 2")]
    KernelDimension { found: usize, eigenvalues: Vec<f64> },
    #[error("degenerate period lattice (determinant {0:e})")]
    DegeneratePeriods(f64),
    #[error("period map depends on the path: defect {0:e}")]
    PathDependence(f64),
    #[error("period map is not a submersion at vertex {vertex} (rank ratio {ratio:e})")]
    RankDeficient { vertex: usize, ratio: f64 },
    #[error("fiber through vertex {vertex} does not close (gap {gap:e})")]
    DisconnectedFiber { vertex: usize, gap: f64 },
    #[error("deck invariance violated by {0:e}")]
    DeckInvariance(f64),
    #[error("field does not match the mesh: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("stage {stage}: {source}")]
    Stage { stage: &'static str, source: Box<RoundingError> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Core(#[from] NilError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

impl RoundingError {
    pub fn at(self, stage: &'static str) -> Self {
        RoundingError::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, RoundingError>;
