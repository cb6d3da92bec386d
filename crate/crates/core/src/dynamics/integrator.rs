use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fields::{Grid, ScalarField, State, VectorField};
use crate::nonlocal::{Channel, ConvolutionPlan};
use crate::potentials::Potential;
use crate::scalar::{max_of, min_of, Real};

use super::params::ModelParams;
use super::viscous::ViscousOperator;

/// Time-step limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepControl<T> {
    /// Safety factor applied to the explicit stability limit. At most 1.
    pub cfl: T,
    pub dt_max: T,
    /// Steps smaller than this are not taken; the floor is used and flagged instead.
    pub dt_min: T,
}

impl<T: Real> Default for StepControl<T> {
    fn default() -> Self {
        StepControl {
            cfl: T::lit(0.4),
            dt_max: T::lit(0.05),
            dt_min: T::lit(1e-10),
        }
    }
}

/// Diagnostics of one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport<T> {
    pub dt: T,
    pub max_density: T,
    pub min_density: T,
    /// `dt · max_cell Σ_axis (|u_axis| + c_s) / h_axis`.
    pub cfl_advective: T,
    /// `dt · 2d · max(eps, (λ+2μ)/max rho) / h²`; informational since diffusion is implicit.
    pub cfl_diffusive: T,
    /// Mass the upwind flux would have carried out through closed boundary faces
    /// during the step. The closed faces block it, so this measures leakage
    /// pressure of a truncated domain, not an actual loss.
    pub boundary_mass_flux: T,
}

/// Suggested step and whether it was raised to the configured floor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DtChoice<T> {
    pub dt: T,
    pub floored: bool,
}

/// New state plus the velocity produced by the implicit solve. Off the support
/// that velocity is a smooth extension; the ledger needs it to keep the
/// discrete dissipation consistent with the scheme.
#[derive(Clone, Debug)]
pub struct StepOutcome<T> {
    pub state: State<T>,
    pub report: StepReport<T>,
    pub velocity: VectorField<T>,
}

/// `10⁻¹² · M / |box|`.
pub fn vacuum_floor<T: Real>(s: &State<T>) -> T {
    T::lit(1e-12) * s.rho.integral() / s.grid().box_volume()
}

/// IMEX time stepper bound to one grid, parameter set and convolution plan.
///
/// Explicit: Rusanov fluxes for mass and momentum transport, pressure, nonlocal
/// and confinement forces (evaluated at the updated density), alignment.
/// Implicit: viscosity, linear damping and artificial density diffusion.
pub struct Integrator<'a, T: Real> {
    params: ModelParams<T>,
    plan: &'a ConvolutionPlan<T>,
    control: StepControl<T>,
    viscous: ViscousOperator<T>,
    phi: Vec<T>,
}

impl<'a, T: Real> Integrator<'a, T> {
    pub fn new(params: &ModelParams<T>, plan: &'a ConvolutionPlan<T>, control: StepControl<T>) -> Result<Self> {
        let grid = plan.grid();
        params.validate(grid.dim())?;
        if !(control.cfl > T::zero() && control.cfl <= T::one()) {
            return Err(invalid("cfl", format!("{} must lie in (0, 1]", control.cfl)));
        }
        if !(control.dt_max > T::zero()) || !(control.dt_min > T::zero()) || control.dt_min > control.dt_max {
            return Err(invalid("dt_max", "need 0 < dt_min <= dt_max"));
        }
        if *plan.kernel() != plan_kernel_for(params, grid) {
            return Err(invalid("plan", "convolution plan was built for a different kernel"));
        }
        let want = params.alignment().copied().unwrap_or(crate::potentials::AlignmentKernel::Zero);
        if params.alignment().is_some() && *plan.alignment_kernel() != want {
            return Err(invalid("plan", "convolution plan was built for a different alignment weight"));
        }
        let mut phi = vec![T::zero(); grid.len()];
        if !params.confinement.is_zero() {
            for (c, v) in phi.iter_mut().enumerate() {
                *v = params.confinement.value(grid.center(c))?;
            }
        }
        Ok(Integrator {
            params: params.clone(),
            plan,
            control,
            viscous: ViscousOperator::new(grid),
            phi,
        })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn plan(&self) -> &ConvolutionPlan<T> {
        self.plan
    }

    pub fn control(&self) -> &StepControl<T> {
        &self.control
    }

    pub fn viscous(&self) -> &ViscousOperator<T> {
        &self.viscous
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.plan.grid()
    }

    /// Confinement sampled at cell centres.
    pub fn confinement_samples(&self) -> &[T] {
        &self.phi
    }

    /// Largest stable explicit step, capped by `dt_max` and floored at `dt_min`.
    pub fn stable_dt(&self, s: &State<T>) -> Result<DtChoice<T>> {
        let grid = self.grid();
        s.rho.check_grid(grid)?;
        let dim = grid.dim();
        let h: Vec<T> = (0..dim).map(|a| grid.h(a)).collect();
        let floor = vacuum_floor(s);
        let u = s.velocity(floor);
        let mut rate = T::zero();
        let mut alpha = [T::zero(); 2];
        for (c, &r) in s.rho.values().iter().enumerate() {
            if !(r > floor) {
                continue;
            }
            let cs = self.params.sound_speed_sq(r).sqrt();
            let mut local = T::zero();
            for a in 0..dim {
                local = local + (u.values()[c][a].abs() + cs) / h[a];
                alpha[a] = max_of(alpha[a], u.values()[c][a].abs());
            }
            rate = max_of(rate, local);
        }
        let positivity: T = (0..dim).map(|a| alpha[a] / h[a]).sum();
        rate = max_of(rate, positivity);
        if let Some(psi) = self.params.alignment() {
            rate = max_of(rate, psi.sup() * s.rho.integral());
        }
        let mut dt = if rate > T::zero() {
            min_of(self.control.cfl / rate, self.control.dt_max)
        } else {
            self.control.dt_max
        };
        let floored = dt < self.control.dt_min;
        if floored {
            dt = self.control.dt_min;
        }
        Ok(DtChoice { dt, floored })
    }

    /// One step returning the new state and its report.
    pub fn step(&self, s: &State<T>, dt: T) -> Result<(State<T>, StepReport<T>)> {
        let out = self.advance(s, dt)?;
        Ok((out.state, out.report))
    }

    /// One step, also returning the velocity of the implicit solve.
    pub fn advance(&self, s: &State<T>, dt: T) -> Result<StepOutcome<T>> {
        let grid = Arc::clone(self.grid());
        s.rho.check_grid(&grid)?;
        s.mom.check_grid(&grid)?;
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(invalid("dt", format!("{dt} must be positive")));
        }
        let p = &self.params;
        let dim = grid.dim();
        let len = grid.len();
        let h: Vec<T> = (0..dim).map(|a| grid.h(a)).collect();
        let half = T::lit(0.5);
        let rho = s.rho.values();
        let mom = s.mom.values();
        let floor = vacuum_floor(s);
        let u = s.velocity(floor);
        let u = u.values();

        let mut alpha = [T::zero(); 2];
        let mut rate = T::zero();
        for c in 0..len {
            if rho[c] > floor {
                let cs = p.sound_speed_sq(rho[c]).sqrt();
                let mut local = T::zero();
                for a in 0..dim {
                    alpha[a] = max_of(alpha[a], u[c][a].abs());
                    local = local + (u[c][a].abs() + cs) / h[a];
                }
                rate = max_of(rate, local);
            }
        }

        // Continuity: Rusanov flux with the global speed bound, on minmod-limited
        // face values of ϱ and u. The central part still sums to Σm over faces.
        let faces: Vec<Vec<FaceStates<T>>> = (0..dim)
            .map(|a| face_states(&grid, a, rho, u, dim))
            .collect();
        let mut rho_new = rho.to_vec();
        for a in 0..dim {
            let lam = dt / h[a];
            for (&(c, n), fs) in grid.open_faces(a).iter().zip(&faces[a]) {
                let f = half * (fs.rho[0] * fs.u[0][a] + fs.rho[1] * fs.u[1][a]) - half * alpha[a] * (fs.rho[1] - fs.rho[0]);
                rho_new[c] = rho_new[c] - lam * f;
                rho_new[n] = rho_new[n] + lam * f;
            }
        }
        let scale = rho.iter().copied().fold(T::zero(), T::max);
        let tol = T::lit(64.0) * T::epsilon() * scale;
        for (c, v) in rho_new.iter_mut().enumerate() {
            if *v < T::zero() {
                if -*v > tol {
                    return Err(Error::NegativeDensity {
                        cell: c,
                        value: v.to_f64_lossy(),
                    });
                }
                *v = T::zero();
            }
        }
        if p.eps > T::zero() {
            rho_new = self.viscous.solve_density_diffusion(&rho_new, dt, p.eps)?;
            for v in rho_new.iter_mut() {
                *v = v.pos();
            }
        }
        let rho_field = ScalarField::new(&grid, rho_new)?;

        // Momentum transport.
        let mut rhs: Vec<[T; 2]> = mom.to_vec();
        for a in 0..dim {
            let lam = dt / h[a];
            for (&(c, n), fs) in grid.open_faces(a).iter().zip(&faces[a]) {
                for k in 0..dim {
                    let ml = fs.rho[0] * fs.u[0][k];
                    let mr = fs.rho[1] * fs.u[1][k];
                    let g = half * (ml * fs.u[0][a] + mr * fs.u[1][a]) - half * alpha[a] * (mr - ml);
                    rhs[c][k] = rhs[c][k] - lam * g;
                    rhs[n][k] = rhs[n][k] + lam * g;
                }
            }
        }

        // Pressure, interaction and confinement as face forces at the new density.
        let rho_new = rho_field.values();
        let pressure: Vec<T> = rho_new.iter().map(|&r| p.pressure(r)).collect();
        let mut potential = self.phi.clone();
        if !p.kernel.is_zero() {
            let k = self.plan.conv_scalar(&rho_field, Channel::Interaction)?;
            for (v, kv) in potential.iter_mut().zip(k.values()) {
                *v = *v + *kv;
            }
        }
        for a in 0..dim {
            for &(c, n) in grid.open_faces(a) {
                let f = -(pressure[n] - pressure[c]) / h[a]
                    - half * (rho_new[c] + rho_new[n]) * (potential[n] - potential[c]) / h[a];
                let impulse = half * dt * f;
                rhs[c][a] = rhs[c][a] + impulse;
                rhs[n][a] = rhs[n][a] + impulse;
            }
        }

        if p.alignment().is_some() {
            let force = self.plan.conv_alignment(s)?;
            for (r, f) in rhs.iter_mut().zip(force.values()) {
                for k in 0..dim {
                    r[k] = r[k] + dt * f[k];
                }
            }
        }

        let vel = self.viscous.solve_velocity(
            rho_new,
            &rhs,
            dt,
            p.mu,
            p.lambda,
            p.linear_damping_rate(),
        )?;
        let floor_new = vacuum_floor_of(&rho_field);
        let mom_new: Vec<[T; 2]> = (0..len)
            .map(|c| {
                let r = rho_new[c];
                if grid.is_active(c) && r > floor_new {
                    [r * vel[c][0], r * vel[c][1]]
                } else {
                    [T::zero(); 2]
                }
            })
            .collect();
        // Flux the closed boundary faces hold back.
        let mut blocked = T::zero();
        for c in (0..len).filter(|&c| grid.is_active(c)) {
            for a in 0..dim {
                for side in [-1i32, 1] {
                    let open = grid.neighbor(c, a, side).is_some_and(|n| grid.is_active(n));
                    if !open {
                        let normal = if side > 0 { mom[c][a] } else { -mom[c][a] };
                        let out = half * normal + half * alpha[a] * rho[c];
                        let face = grid.cell_volume() / h[a];
                        blocked = blocked + dt * face * out.pos();
                    }
                }
            }
        }

        let rho_max = rho_new.iter().copied().fold(T::zero(), T::max);
        let rho_min = (0..len)
            .filter(|&c| grid.is_active(c))
            .map(|c| rho_new[c])
            .fold(T::infinity(), T::min);
        let hmin = h.iter().copied().fold(T::infinity(), T::min);
        let nu = if rho_max > T::zero() {
            (p.lambda + T::lit(2.0) * p.mu) / rho_max
        } else {
            T::zero()
        };
        let report = StepReport {
            dt,
            max_density: rho_max,
            min_density: rho_min,
            cfl_advective: dt * rate,
            cfl_diffusive: dt * T::lit(2.0) * T::from_usize_lossy(dim) * max_of(p.eps, nu) / (hmin * hmin),
            boundary_mass_flux: blocked,
        };
        let velocity = VectorField::new(&grid, vel)?;
        let state = State::new(s.time + dt, rho_field, VectorField::new(&grid, mom_new)?)?;
        Ok(StepOutcome {
            state,
            report,
            velocity,
        })
    }
}

/// Limited values of ϱ and u on the two sides of one face.
struct FaceStates<T> {
    rho: [T; 2],
    u: [[T; 2]; 2],
}

fn minmod<T: Real>(a: T, b: T) -> T {
    if a * b <= T::zero() {
        T::zero()
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Minmod slope of `f` along `axis`, zero next to closed faces.
fn limited_slope<T: Real>(grid: &Grid<T>, axis: usize, c: usize, f: impl Fn(usize) -> T) -> T {
    let open = |side| grid.neighbor(c, axis, side).filter(|&n| grid.is_active(n));
    match (open(-1), open(1)) {
        (Some(l), Some(r)) => minmod(f(c) - f(l), f(r) - f(c)),
        _ => T::zero(),
    }
}

fn face_states<T: Real>(grid: &Grid<T>, axis: usize, rho: &[T], u: &[[T; 2]], dim: usize) -> Vec<FaceStates<T>> {
    let half = T::lit(0.5);
    let slopes = |c: usize| {
        let sr = limited_slope(grid, axis, c, |i| rho[i]);
        let mut su = [T::zero(); 2];
        for (k, s) in su.iter_mut().enumerate().take(dim) {
            *s = limited_slope(grid, axis, c, |i| u[i][k]);
        }
        (sr, su)
    };
    grid.open_faces(axis)
        .iter()
        .map(|&(c, n)| {
            let (rc, uc) = slopes(c);
            let (rn, un) = slopes(n);
            FaceStates {
                rho: [rho[c] + half * rc, rho[n] - half * rn],
                u: [
                    [u[c][0] + half * uc[0], u[c][1] + half * uc[1]],
                    [u[n][0] - half * un[0], u[n][1] - half * un[1]],
                ],
            }
        })
        .collect()
}

fn vacuum_floor_of<T: Real>(rho: &ScalarField<T>) -> T {
    T::lit(1e-12) * rho.integral() / rho.grid().box_volume()
}

/// The kernel a plan holds after its own automatic mollification.
fn plan_kernel_for<T: Real>(p: &ModelParams<T>, grid: &Grid<T>) -> crate::potentials::KernelSpec<T> {
    use crate::potentials::KernelKind;
    match p.kernel.kind {
        KernelKind::PowerLaw { core_radius, .. } if core_radius == T::zero() => p.kernel.mollified_for(grid),
        _ => p.kernel,
    }
}
