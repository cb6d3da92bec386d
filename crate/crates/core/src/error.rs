use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("field lives on a different grid than the operator expects")]
    GridMismatch,

    #[error("invalid parameter `{name}`: {constraint}")]
    InvalidParameter { name: &'static str, constraint: String },

    #[error("evaluation at the kernel singularity x = 0 (kernel has no core mollification)")]
    Singularity,

    #[error("negative density {value:e} in cell {cell} after update (time step too large)")]
    NegativeDensity { cell: usize, value: f64 },

    #[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("could not bracket the mass constraint; mass-vs-level samples: {curve:?}")]
    BracketFailure { curve: Vec<(f64, f64)> },

    #[error("time step underflow: dt = {dt:e} below floor {floor:e}")]
    DtUnderflow { dt: f64, floor: f64 },

    #[error("free energy increased by {increase:e} at t = {time}")]
    EnergyIncrease { time: f64, increase: f64 },

    #[error("step failed at t = {time}: {source}")]
    StepFailed {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("confinement lower bound violated first at radius {radius}")]
    TailPrecondition { radius: f64 },

    #[error("renormalization function is not flat for large densities (b'({at}) = {slope:e})")]
    NotFlat { at: f64, slope: f64 },

    #[error("requested window [{start}, {end}] is not covered by the trajectory")]
    WindowOutside { start: f64, end: f64 },

    #[error("operation requires zero confinement")]
    ConfinementPresent,

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, constraint: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        constraint: constraint.into(),
    }
}
