use thiserror::Error;

/// Errors raised by the solvers and evaluators in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("total masses differ: {source_mass} vs {target_mass}")]
    MassMismatch { source_mass: f64, target_mass: f64 },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("empty support")]
    EmptySupport,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("potentials violate dual feasibility by {0:e}")]
    InfeasiblePotentials(f64),

    #[error("source atom {0} carries no mass in the plan")]
    ZeroRowMass(usize),

    #[error("transport solver failed: {0}")]
    SolverFailure(String),

    #[error("value {value} at index {index} leaves [0, 1]")]
    RangeError { index: usize, value: f64 },

    #[error("level field is not nondecreasing in a at cell {cell}, level {level}")]
    NotMonotone { cell: usize, level: usize },

    #[error("grids differ: {0} vs {1} cells")]
    GridMismatch(usize, usize),

    #[error("CFL violated: dt * speed = {courant:.4} cell widths (limit {limit})")]
    CflViolation { courant: f64, limit: f64 },

    #[error("non-positive density h = {0}")]
    NonpositiveDensity(f64),

    #[error("density lost positivity at cell {cell} (h = {h})")]
    PositivityLoss { cell: usize, h: f64 },

    #[error("path minimization stalled: gradient norm {grad_norm:e} after {iterations} iterations (value {value})")]
    NonConvergence {
        grad_norm: f64,
        iterations: usize,
        value: f64,
    },

    #[error("smallness condition fails: margin {margin}")]
    SmallnessViolated { margin: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
