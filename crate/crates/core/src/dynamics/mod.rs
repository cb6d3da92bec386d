//! Time integration of the damped compressible system with nonlocal forces.

mod integrator;
mod params;
mod run;
mod viscous;

pub use integrator::{vacuum_floor, DtChoice, Integrator, StepControl, StepOutcome, StepReport};
pub use params::{Damping, ModelParams};
pub use run::{RunOptions, RunStatus, SteadyDetection, Trajectory};
pub use viscous::ViscousOperator;

#[cfg(test)]
mod tests;
