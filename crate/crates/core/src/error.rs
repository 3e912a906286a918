use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension {0}: at least 2 levels are required")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("matrix is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not a valid state (trace defect {trace_defect:e}, minimum eigenvalue {min_eigenvalue:e})")]
    NotAState {
        min_eigenvalue: f64,
        trace_defect: f64,
    },
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("unknown theory '{0}'")]
    UnknownTheory(String),
    #[error("matrix is not antisymmetric (defect {0:e})")]
    NotAntisymmetric(f64),
    #[error("no admissible evolution about axis ({:.6}, {:.6}, {:.6})", .0[0], .0[1], .0[2])]
    NoAdmissibleEvolution([f64; 3]),
    #[error("time {t} is not an integer multiple of the minimal time tau* = {tau}")]
    OffLatticeTime { t: f64, tau: f64 },
    #[error("state ({:.6}, {:.6}, {:.6}) lies outside the state space (violation {violation:e})", .state[0], .state[1], .state[2])]
    OutsideStateSpace { state: [f64; 3], violation: f64 },
    #[error("unsupported state space: {0}")]
    UnsupportedSpace(String),
    #[error("degenerate vertex set: {0}")]
    DegeneratePolytope(String),
    #[error("vertex centroid ({:.3e}, {:.3e}, {:.3e}) is not at the origin; affine symmetries are unsupported", .0[0], .0[1], .0[2])]
    CentroidNotAtOrigin([f64; 3]),
    #[error("vertices span {0} dimensions; three are required")]
    NotThreeDimensional(usize),
    #[error("invalid group: {0}")]
    InvalidGroup(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("index graph of energy pairs is disconnected: {0}")]
    DisconnectedPairs(String),
    #[error("inconsistent energy differences (residual {residual:e}, allowed {allowed:e})")]
    InconsistentCycle { residual: f64, allowed: f64 },
    #[error("period must be positive, got {0}")]
    NonPositivePeriod(f64),
    #[error("potential gradient is not finite on the grid (value {0})")]
    NonFinitePotential(f64),
    #[error("invalid phase-space grid: {0}")]
    InvalidPhaseGrid(String),
    #[error(
        "matrix exponential of dimension {0} exceeds the dense limit of 4096; use the rk4 method"
    )]
    ExpmTooLarge(usize),
}
