use crate::energy::{dissipation_for_velocity, dissipation_rate, free_energy, EnergyLedger, LedgerRow};
use crate::error::{invalid, Error, Result};
use crate::fields::{State, VectorField};
use crate::scalar::Real;

use super::integrator::{Integrator, StepReport};

/// Early termination once the flow has come to rest.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyDetection<T> {
    /// Threshold on `‖∇u‖_{L²}`.
    pub grad_u: T,
    /// Threshold on `∫ rho |u|²`.
    pub kinetic: T,
    /// Number of consecutive ledger rows both thresholds must hold for.
    pub rows: usize,
}

impl<T: Real> Default for SteadyDetection<T> {
    fn default() -> Self {
        SteadyDetection {
            grad_u: T::lit(1e-6),
            kinetic: T::lit(1e-10),
            rows: 100,
        }
    }
}

/// What to record during a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions<T> {
    /// Ledger spacing in time; `None` writes a row after every step.
    pub ledger_every: Option<T>,
    /// Snapshot spacing in time; `None` keeps only the initial and final states.
    pub snapshot_every: Option<T>,
    pub steady: Option<SteadyDetection<T>>,
    pub max_steps: usize,
}

impl<T: Real> Default for RunOptions<T> {
    fn default() -> Self {
        RunOptions {
            ledger_every: None,
            snapshot_every: None,
            steady: None,
            max_steps: 10_000_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunStatus<T> {
    Completed,
    SteadyDetected { time: T },
    StepLimit,
}

/// Everything a run produced.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub snapshots: Vec<State<T>>,
    pub ledger: EnergyLedger<T>,
    pub status: RunStatus<T>,
    pub steps: usize,
    /// Steps where the stability limit fell below `dt_min` and the floor was used.
    pub floored_steps: usize,
    pub final_state: State<T>,
    /// Velocity of the last implicit solve (`m / rho` extended into vacuum for an empty run).
    pub final_velocity: Option<VectorField<T>>,
}

impl<T: Real> Trajectory<T> {
    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }
}

fn initial_report<T: Real>(s: &State<T>) -> StepReport<T> {
    let g = s.grid();
    let rho = s.rho.values();
    StepReport {
        dt: T::zero(),
        max_density: rho.iter().copied().fold(T::zero(), T::max),
        min_density: (0..g.len())
            .filter(|&c| g.is_active(c))
            .map(|c| rho[c])
            .fold(T::infinity(), T::min),
        cfl_advective: T::zero(),
        cfl_diffusive: T::zero(),
        boundary_mass_flux: T::zero(),
    }
}

impl<T: Real> Integrator<'_, T> {
    /// Ledger row of a state at rest in the record, with dissipation from its own velocity.
    pub fn initial_row(&self, s: &State<T>) -> Result<LedgerRow<T>> {
        let energy = free_energy(s, self.params(), self.plan())?;
        let (visc, damp) = dissipation_rate(s, self.params(), self.plan())?;
        Ok(LedgerRow {
            t: s.time,
            energy,
            dissipation_visc: visc,
            dissipation_damp: damp,
            inequality_residual: T::zero(),
            step: initial_report(s),
        })
    }

    /// Adaptive stepping from `s0` to `t_end`, hitting every output time exactly.
    pub fn run(&self, s0: &State<T>, t_end: T, options: &RunOptions<T>) -> Result<Trajectory<T>> {
        if t_end < s0.time || !t_end.is_finite() {
            return Err(invalid("t_end", format!("{t_end} precedes the initial time {}", s0.time)));
        }
        s0.rho.check_grid(self.grid())?;
        if t_end == s0.time {
            return Ok(Trajectory {
                snapshots: Vec::new(),
                ledger: EnergyLedger::new(),
                status: RunStatus::Completed,
                steps: 0,
                floored_steps: 0,
                final_state: s0.clone(),
                final_velocity: None,
            });
        }
        for (name, every) in [("ledger_every", options.ledger_every), ("snapshot_every", options.snapshot_every)] {
            if let Some(e) = every {
                if !(e > T::zero()) {
                    return Err(invalid(name, "output spacing must be positive"));
                }
            }
        }
        let t0 = s0.time;
        let mut ledger = EnergyLedger::new();
        let mut prev_row = self.initial_row(s0)?;
        ledger.push(prev_row)?;
        let mut snapshots = vec![s0.clone()];
        let mut state = s0.clone();
        let mut velocity = None;
        let mut steps = 0;
        let mut floored_steps = 0;
        let mut status = RunStatus::Completed;
        let mut calm_rows = 0;
        let mut ledger_k = 1usize;
        let mut snap_k = 1usize;
        let next_time = |every: Option<T>, k: usize| every.map(|e| (t0 + e * T::from_usize_lossy(k)).min(t_end));

        while state.time < t_end {
            if steps >= options.max_steps {
                status = RunStatus::StepLimit;
                break;
            }
            let choice = self.stable_dt(&state)?;
            if choice.floored {
                floored_steps += 1;
            }
            let mut target = t_end;
            if let Some(t) = next_time(options.ledger_every, ledger_k) {
                target = target.min(t);
            }
            if let Some(t) = next_time(options.snapshot_every, snap_k) {
                target = target.min(t);
            }
            let mut dt = choice.dt;
            let hits = state.time + dt >= target;
            if hits {
                dt = target - state.time;
            }
            let time = state.time;
            let outcome = self.advance(&state, dt).map_err(|e| Error::StepFailed {
                time: time.to_f64_lossy(),
                source: Box::new(e),
            })?;
            state = outcome.state;
            if hits {
                state.time = target;
            }
            steps += 1;

            let ledger_due = match next_time(options.ledger_every, ledger_k) {
                None => true,
                Some(t) => state.time >= t,
            };
            if ledger_due {
                if options.ledger_every.is_some() {
                    ledger_k += 1;
                }
                let energy = free_energy(&state, self.params(), self.plan())?;
                let (visc, damp) = dissipation_for_velocity(
                    &state,
                    self.params(),
                    self.plan(),
                    self.viscous(),
                    &outcome.velocity,
                )?;
                let mut row = LedgerRow {
                    t: state.time,
                    energy,
                    dissipation_visc: visc,
                    dissipation_damp: damp,
                    inequality_residual: T::zero(),
                    step: outcome.report,
                };
                row.inequality_residual = crate::energy::interval_residual(&prev_row, &row);
                ledger.push(row)?;
                prev_row = row;

                if let Some(det) = options.steady {
                    let u = outcome.velocity.values();
                    let grad = self.viscous().grad_norm_sq(u).sqrt();
                    let rho = state.rho.values();
                    let kin = (0..rho.len())
                        .map(|c| rho[c] * (u[c][0] * u[c][0] + u[c][1] * u[c][1]))
                        .sum::<T>()
                        * state.grid().cell_volume();
                    if grad < det.grad_u && kin < det.kinetic {
                        calm_rows += 1;
                    } else {
                        calm_rows = 0;
                    }
                    if calm_rows >= det.rows.max(1) {
                        status = RunStatus::SteadyDetected { time: state.time };
                    }
                }
            }
            if let Some(t) = next_time(options.snapshot_every, snap_k) {
                if state.time >= t {
                    snap_k += 1;
                    snapshots.push(state.clone());
                }
            }
            velocity = Some(outcome.velocity);
            if matches!(status, RunStatus::SteadyDetected { .. }) {
                break;
            }
        }
        if snapshots.last().map(|s| s.time) != Some(state.time) {
            snapshots.push(state.clone());
        }
        Ok(Trajectory {
            snapshots,
            ledger,
            status,
            steps,
            floored_steps,
            final_state: state,
            final_velocity: velocity,
        })
    }
}
