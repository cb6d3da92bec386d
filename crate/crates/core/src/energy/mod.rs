//! Free energy, dissipation and the derived checks on trajectories.

mod renormalized;

pub use renormalized::{
    renormalized_residual, AffineRenormalization, ClosureRenormalization, Renormalization,
    SmoothCapSquare, TestBasis,
};

use crate::dynamics::{vacuum_floor, Damping, ModelParams, StepReport, ViscousOperator};
use crate::error::{invalid, Error, Result};
use crate::fields::{State, VectorField};
use crate::nonlocal::{Channel, ConvolutionPlan};
use crate::potentials::{ConfinementSpec, Potential};
use crate::scalar::Real;

/// Terms of the total energy `E`. The free energy is `E` minus `kinetic`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EnergyComponents<T> {
    pub kinetic: T,
    pub internal: T,
    pub interaction: T,
    pub confinement: T,
    pub delta_term: T,
}

impl<T: Real> EnergyComponents<T> {
    pub fn total(&self) -> T {
        self.kinetic + self.free()
    }

    /// Everything except the kinetic energy.
    pub fn free(&self) -> T {
        self.internal + self.interaction + self.confinement + self.delta_term
    }
}

/// One ledger line: energies, dissipation rates and step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LedgerRow<T> {
    pub t: T,
    pub energy: EnergyComponents<T>,
    pub dissipation_visc: T,
    pub dissipation_damp: T,
    /// `E(t) - E(t_prev) + ∫ D` since the previous row; zero on the first row.
    pub inequality_residual: T,
    /// Diagnostics of the step that produced this row. `dt` is zero on an initial row.
    pub step: StepReport<T>,
}

impl<T: Real> LedgerRow<T> {
    pub fn dissipation(&self) -> T {
        self.dissipation_visc + self.dissipation_damp
    }

    /// Values in [`LEDGER_COLUMNS`] order.
    pub fn values(&self) -> [f64; 15] {
        let e = &self.energy;
        let s = &self.step;
        [
            self.t,
            e.kinetic,
            e.internal,
            e.interaction,
            e.confinement,
            e.delta_term,
            self.dissipation_visc,
            self.dissipation_damp,
            self.inequality_residual,
            s.dt,
            s.max_density,
            s.min_density,
            s.cfl_advective,
            s.cfl_diffusive,
            s.boundary_mass_flux,
        ]
        .map(|v| v.to_f64_lossy())
    }
}

/// CSV header of the ledger.
pub const LEDGER_COLUMNS: [&str; 15] = [
    "t",
    "kinetic",
    "internal",
    "interaction",
    "confinement",
    "delta_term",
    "dissipation_visc",
    "dissipation_damp",
    "inequality_residual",
    "dt",
    "max_density",
    "min_density",
    "cfl_advective",
    "cfl_diffusive",
    "boundary_mass_flux",
];

/// Time-ordered energy rows of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyLedger<T> {
    rows: Vec<LedgerRow<T>>,
}

impl<T: Real> EnergyLedger<T> {
    pub fn new() -> Self {
        EnergyLedger { rows: Vec::new() }
    }

    /// Rejects non-finite entries, negative kinetic/internal/delta terms, and
    /// times that do not increase.
    pub fn push(&mut self, row: LedgerRow<T>) -> Result<()> {
        if row.values().iter().any(|v| !v.is_finite()) {
            return Err(invalid("ledger", format!("non-finite entry at t = {}", row.t)));
        }
        let e = &row.energy;
        if e.kinetic < T::zero() || e.internal < T::zero() || e.delta_term < T::zero() {
            return Err(invalid("ledger", format!("negative energy term at t = {}", row.t)));
        }
        if let Some(last) = self.rows.last() {
            if !(row.t > last.t) {
                return Err(invalid(
                    "ledger",
                    format!("time {} does not follow {}", row.t, last.t),
                ));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[LedgerRow<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&LedgerRow<T>> {
        self.rows.last()
    }
}

/// Energy terms of a state, all by midpoint quadrature.
pub fn free_energy<T: Real>(s: &State<T>, p: &ModelParams<T>, plan: &ConvolutionPlan<T>) -> Result<EnergyComponents<T>> {
    let grid = s.grid();
    s.rho.check_grid(plan.grid())?;
    let vol = grid.cell_volume();
    let rho = s.rho.values();
    let mut e = EnergyComponents::default();
    let mut kinetic = T::zero();
    let mut internal = T::zero();
    let mut delta = T::zero();
    let mut conf = T::zero();
    let confined = !p.confinement.is_zero();
    for (c, (&r, m)) in rho.iter().zip(s.mom.values()).enumerate() {
        if r <= T::zero() {
            continue;
        }
        kinetic = kinetic + (m[0] * m[0] + m[1] * m[1]) / r;
        internal = internal + r.powf(p.m);
        if p.delta > T::zero() {
            delta = delta + r.powf(p.beta);
        }
        if confined {
            conf = conf + r * p.confinement.value(grid.center(c))?;
        }
    }
    e.kinetic = T::lit(0.5) * kinetic * vol;
    e.internal = p.a / (p.m - T::one()) * internal * vol;
    if p.delta > T::zero() {
        e.delta_term = p.delta / (p.beta - T::one()) * delta * vol;
    }
    e.confinement = conf * vol;
    if !p.kernel.is_zero() {
        let k = plan.conv_scalar(&s.rho, Channel::Interaction)?;
        let sum: T = rho.iter().zip(k.values()).map(|(&r, &kv)| r * kv).sum();
        e.interaction = T::lit(0.5) * sum * vol;
    }
    Ok(e)
}

/// `(visc, damp)` for a state. The velocity is `m / rho` on cells above the
/// vacuum floor and the viscous-harmonic extension elsewhere, which is the
/// velocity the implicit solve would carry into vacuum.
pub fn dissipation_rate<T: Real>(s: &State<T>, p: &ModelParams<T>, plan: &ConvolutionPlan<T>) -> Result<(T, T)> {
    let op = ViscousOperator::new(s.grid());
    let floor = vacuum_floor(s);
    let u = s.velocity(floor);
    let support: Vec<bool> = s.rho.values().iter().map(|&r| r > floor).collect();
    let ext = op.extend(u.values(), &support, p.mu, p.lambda)?;
    dissipation_for_velocity(s, p, plan, &op, &VectorField::new(s.grid(), ext)?)
}

/// Dissipation of a state with an explicitly given velocity field.
pub fn dissipation_for_velocity<T: Real>(
    s: &State<T>,
    p: &ModelParams<T>,
    plan: &ConvolutionPlan<T>,
    op: &ViscousOperator<T>,
    u: &VectorField<T>,
) -> Result<(T, T)> {
    u.check_grid(s.grid())?;
    let grid = s.grid();
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let rho = s.rho.values();
    let uv = u.values();
    let visc = op.dissipation(uv, p.mu, p.lambda);
    let speed_sq = |c: usize| (0..dim).map(|k| uv[c][k] * uv[c][k]).sum::<T>();
    let damp = match &p.damping {
        Damping::None => T::zero(),
        Damping::Linear => (0..grid.len()).map(|c| rho[c] * speed_sq(c)).sum::<T>() * vol,
        Damping::Alignment(_) => {
            // ½ ΣΣ ψ ρρ |u_y - u_x|² = Σ ρ|u|² (ψ*ρ) - Σ ρu·(ψ*(ρu))
            let psi_rho = plan.conv_scalar(&s.rho, Channel::Alignment)?;
            let mut acc: T = (0..grid.len())
                .map(|c| rho[c] * speed_sq(c) * psi_rho.values()[c])
                .sum();
            for k in 0..dim {
                let mk = crate::fields::ScalarField::new(
                    grid,
                    (0..grid.len()).map(|c| rho[c] * uv[c][k]).collect(),
                )?;
                let psi_m = plan.conv_scalar(&mk, Channel::Alignment)?;
                acc = acc
                    - mk.values()
                        .iter()
                        .zip(psi_m.values())
                        .map(|(&a, &b)| a * b)
                        .sum::<T>();
            }
            (acc * vol).pos()
        }
    };
    Ok((visc, damp))
}

/// Residual of one ledger interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualEntry<T> {
    /// End of the interval.
    pub t: T,
    pub residual: T,
    pub flagged: bool,
}

/// `E(t_{n+1}) - E(t_n) + ∫ D` with the trapezoid rule, for consecutive rows.
/// Entries above `tol` are flagged.
pub fn energy_inequality_check<T: Real>(ledger: &EnergyLedger<T>, tol: T) -> Vec<ResidualEntry<T>> {
    ledger
        .rows()
        .windows(2)
        .map(|w| {
            let residual = interval_residual(&w[0], &w[1]);
            ResidualEntry {
                t: w[1].t,
                residual,
                flagged: residual > tol,
            }
        })
        .collect()
}

pub(crate) fn interval_residual<T: Real>(prev: &LedgerRow<T>, next: &LedgerRow<T>) -> T {
    let dt = next.t - prev.t;
    next.energy.total() - prev.energy.total()
        + T::lit(0.5) * dt * (prev.dissipation() + next.dissipation())
}

/// Sums of the interval residuals over consecutive windows of length `window`
/// starting at the first row. Resolution independent, so runs with different
/// step sizes can be compared.
pub fn windowed_residuals<T: Real>(ledger: &EnergyLedger<T>, window: T) -> Result<Vec<T>> {
    if !(window > T::zero()) {
        return Err(invalid("window", "must be positive"));
    }
    let rows = ledger.rows();
    let Some(first) = rows.first() else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let mut acc = T::zero();
    let mut edge = first.t + window;
    let tiny = window * T::lit(1e-9);
    for w in rows.windows(2) {
        acc = acc + interval_residual(&w[0], &w[1]);
        if w[1].t >= edge - tiny {
            out.push(acc);
            acc = T::zero();
            edge = edge + window;
        }
    }
    Ok(out)
}

/// Chebyshev tail estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound<T> {
    /// `Σ_{|x| > R} rho h^d`.
    pub tail_mass: T,
    /// `R^{-(1+ν)} Σ Φ rho h^d`.
    pub bound: T,
    pub holds: bool,
}

/// Mass beyond radius `R` against its Chebyshev bound from the confinement energy.
/// Requires `Φ(x) >= |x|^{1+ν}` at every cell centre with `|x| >= R`.
pub fn tail_mass_bound<T: Real>(s: &State<T>, c: &ConfinementSpec<T>, radius: T) -> Result<TailBound<T>> {
    if !(radius > T::zero()) {
        return Err(invalid("radius", "must be positive"));
    }
    let grid = s.grid();
    let power = T::one() + c.growth_exponent;
    let mut offending: Option<T> = None;
    let mut tail = T::zero();
    let mut energy = T::zero();
    for (cell, &r) in s.rho.values().iter().enumerate() {
        let x = grid.center(cell);
        let phi = c.value(x)?;
        let dist = grid.radius_of(cell);
        if dist >= radius {
            if phi < dist.powf(power) {
                offending = Some(offending.map_or(dist, |o: T| o.min(dist)));
            }
            if dist > radius {
                tail = tail + r;
            }
        }
        energy = energy + phi * r;
    }
    if let Some(at) = offending {
        return Err(Error::TailPrecondition { radius: at.to_f64_lossy() });
    }
    let vol = grid.cell_volume();
    let tail_mass = tail * vol;
    let bound = energy * vol / radius.powf(power);
    Ok(TailBound {
        tail_mass,
        bound,
        holds: tail_mass <= bound,
    })
}

/// `(∫_{t0}^{t1} Σ_{x ∈ B} rho^p h^d dt)^{1/p}` with `B = [-b, b]^d` (cells whose
/// centres lie in `B`). The time integral is exact for the piecewise linear
/// interpolant of the snapshot sums, so it is the trapezoid rule when the window
/// ends on snapshots.
pub fn spacetime_norm<T: Real>(snapshots: &[State<T>], p: T, window: (T, T), half_width: T) -> Result<T> {
    let (t0, t1) = window;
    let outside = || Error::WindowOutside {
        start: t0.to_f64_lossy(),
        end: t1.to_f64_lossy(),
    };
    let (first, last) = match (snapshots.first(), snapshots.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(outside()),
    };
    if !(t1 > t0) || t0 < first.time || t1 > last.time {
        return Err(outside());
    }
    if !(p >= T::one()) {
        return Err(invalid("p", "exponent must be >= 1"));
    }
    let sums: Vec<(T, T)> = snapshots
        .iter()
        .map(|s| {
            let g = s.grid();
            let inside = |c: usize| {
                let x = g.center(c);
                (0..g.dim()).all(|a| x[a].abs() <= half_width)
            };
            let sum: T = s
                .rho
                .values()
                .iter()
                .enumerate()
                .filter(|&(c, _)| inside(c))
                .map(|(_, &r)| r.powf(p))
                .sum();
            (s.time, sum * g.cell_volume())
        })
        .collect();
    let mut integral = T::zero();
    for w in sums.windows(2) {
        let (ta, fa) = w[0];
        let (tb, fb) = w[1];
        let lo = ta.max(t0);
        let hi = tb.min(t1);
        if hi <= lo || tb <= ta {
            continue;
        }
        let at = |t: T| fa + (fb - fa) * (t - ta) / (tb - ta);
        integral = integral + T::lit(0.5) * (at(lo) + at(hi)) * (hi - lo);
    }
    Ok(integral.powf(p.recip()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{Grid, ScalarField};
    use crate::nonlocal::ConvolutionMethod;
    use crate::potentials::{AlignmentKernel, KernelSpec};

    fn plan_for(grid: &std::sync::Arc<Grid<f64>>, k: KernelSpec<f64>) -> ConvolutionPlan<f64> {
        ConvolutionPlan::new(
            grid,
            &k,
            &AlignmentKernel::Gaussian { strength: 1.0, length: 1.0 },
            ConvolutionMethod::Spectral,
        )
        .unwrap()
    }

    #[test]
    fn uniform_block_internal_energy() {
        let g = Grid::<f64>::line(64, 2.0).unwrap();
        let rho = ScalarField::from_fn(&g, |x| if x[0].abs() < 1.0 { 1.0 } else { 0.0 });
        let s = State::at_rest(0.0, rho).unwrap();
        let e = free_energy(&s, &ModelParams::standard(), &plan_for(&g, KernelSpec::zero())).unwrap();
        assert!((e.total() - 2.0).abs() < 1e-12);
        assert_eq!(e.internal, e.total());
    }

    #[test]
    fn two_cell_interaction_by_hand() {
        let g = Grid::line(16, 2.0).unwrap();
        let h = g.h(0);
        let mut v = vec![0.0; 16];
        v[5] = 1.0 / h;
        v[9] = 1.0 / h;
        let s = State::at_rest(0.0, ScalarField::new(&g, v).unwrap()).unwrap();
        let p = ModelParams {
            kernel: KernelSpec::gaussian_attractive(1.0),
            ..ModelParams::standard()
        };
        let e = free_energy(&s, &p, &plan_for(&g, p.kernel)).unwrap();
        let sep = 4.0 * h;
        // ½ Σ_i Σ_j K(x_i - x_j) m_i m_j with unit masses.
        let expect = 0.5 * 2.0 * (-1.0 + -(-sep * sep as f64).exp());
        assert!((e.interaction - expect).abs() < 1e-12);
    }

    #[test]
    fn kinetic_scales_quadratically() {
        let g = Grid::<f64>::line(32, 2.0).unwrap();
        let rho = ScalarField::from_fn(&g, |x| (-x[0] * x[0]).exp());
        let p = ModelParams::standard();
        let plan = plan_for(&g, KernelSpec::zero());
        let s1 = State::with_velocity(0.0, rho.clone(), |x| [x[0].sin(), 0.0]).unwrap();
        let s2 = State::with_velocity(0.0, rho, |x| [2.0 * x[0].sin(), 0.0]).unwrap();
        let e1 = free_energy(&s1, &p, &plan).unwrap();
        let e2 = free_energy(&s2, &p, &plan).unwrap();
        assert!((e2.kinetic - 4.0 * e1.kinetic).abs() < 1e-12);
        assert_eq!(e1.internal, e2.internal);
    }

    #[test]
    fn dissipation_examples() {
        let g = Grid::new(1, 64, 2.0, crate::fields::DomainKind::Ball { radius: 1.5 }).unwrap();
        let rho = ScalarField::from_fn(&g, |_| 1.0);
        let plan = plan_for(&g, KernelSpec::zero());
        let p = ModelParams::standard();
        let rest = State::at_rest(0.0, rho.clone()).unwrap();
        assert_eq!(dissipation_rate(&rest, &p, &plan).unwrap(), (0.0, 0.0));

        let moving = State::with_velocity(0.0, rho.clone(), |_| [0.5, 0.0]).unwrap();
        let (visc, damp) = dissipation_rate(&moving, &p, &plan).unwrap();
        let mass = rho.integral();
        assert!((damp - 0.25 * mass).abs() < 1e-12);
        // Only the two wall faces see a velocity jump: 2 · μ (0.5/h)² h · (1 + 1) in 1D.
        let h = g.h(0);
        let expect = 2.0 * 2.0 * 0.25 / h;
        assert!((visc - expect).abs() < 1e-9 * expect);

        let align = ModelParams {
            damping: Damping::Alignment(AlignmentKernel::Gaussian { strength: 1.0, length: 1.0 }),
            ..p
        };
        let (_, damp) = dissipation_rate(&moving, &align, &plan).unwrap();
        assert!(damp.abs() < 1e-12);
    }

    #[test]
    fn spacetime_norm_of_uniform_state() {
        let g = Grid::line(40, 2.0).unwrap();
        let states: Vec<State<f64>> = (0..4)
            .map(|k| State::at_rest(k as f64, ScalarField::from_fn(&g, |_| 1.0)).unwrap())
            .collect();
        let p = 2.25;
        let v = spacetime_norm(&states, p, (0.0, 3.0), 1.0).unwrap();
        assert!((v - 6f64.powf(1.0 / p)).abs() < 1e-12);
        let smaller = spacetime_norm(&states, p, (0.0, 3.0), 0.5).unwrap();
        assert!(smaller < v);
        assert!(spacetime_norm(&states, p, (0.0, 3.5), 1.0).is_err());
    }

    #[test]
    fn tail_bound_examples() {
        let g = Grid::<f64>::line(200, 6.0).unwrap();
        let rho = ScalarField::from_fn(&g, |x| (-x[0] * x[0]).exp());
        let s = State::at_rest(0.0, rho).unwrap();
        let phi = ConfinementSpec::quadratic(2.0).with_growth_exponent(0.5);
        let tb = tail_mass_bound(&s, &phi, 3.0).unwrap();
        assert!(tb.holds && tb.tail_mass < tb.bound);
        let tb4 = tail_mass_bound(&s, &phi, 4.0).unwrap();
        assert!(tb4.bound <= tb.bound);
        // |x|²/2 < |x|^1.5 for 1 <= |x| < 4
        let weak = ConfinementSpec::quadratic(1.0).with_growth_exponent(0.5);
        assert!(matches!(tail_mass_bound(&s, &weak, 1.0), Err(Error::TailPrecondition { .. })));
    }
}
