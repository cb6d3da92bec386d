//! Stationary densities of the force balance `a∇ϱ^m + ϱ∇K∗ϱ + ϱ∇Φ = 0`.
//!
//! On a connected support the balance integrates to the level condition
//! `am/(m-1) ϱ^{m-1} + K∗ϱ + Φ = C`. Two independent solvers target it: a
//! mass-constrained fixed point of that condition, and the aggregation-diffusion
//! gradient flow run to a standstill.

mod barenblatt;
mod compare;
mod gradient_flow;

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fields::{Grid, ScalarField};
use crate::nonlocal::{Channel, ConvolutionMethod, ConvolutionPlan};
use crate::potentials::{AlignmentKernel, ConfinementSpec, KernelSpec, Potential};
use crate::scalar::{max_of, Real};

pub use barenblatt::Barenblatt;
pub use compare::{com_trajectory, flock_frame, omega_limit_distance, ComCase, FlockFrame};
pub use gradient_flow::solve_gradient_flow;

#[derive(Clone, Debug)]
pub struct SteadyProblem<T: Real> {
    pub kernel: KernelSpec<T>,
    pub confinement: ConfinementSpec<T>,
    pub a: T,
    pub m: T,
    pub mass: T,
    pub centre: [T; 2],
    pub grid: Arc<Grid<T>>,
}

impl<T: Real> SteadyProblem<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > T::zero()) || !self.mass.is_finite() {
            return Err(invalid("mass", format!("{} must be positive", self.mass)));
        }
        if !(self.m > T::lit(1.5)) || !self.m.is_finite() {
            return Err(invalid("m", format!("m = {} must exceed 3/2", self.m)));
        }
        if !(self.a > T::zero()) || !self.a.is_finite() {
            return Err(invalid("a", format!("{} must be positive", self.a)));
        }
        if !self.centre.iter().all(|c| c.is_finite()) {
            return Err(invalid("centre", "must be finite"));
        }
        self.kernel.validate()
    }

    /// Enthalpy `am/(m-1) ϱ^{m-1}`.
    pub fn enthalpy(&self, rho: T) -> T {
        if rho > T::zero() {
            self.a * self.m / (self.m - T::one()) * rho.powf(self.m - T::one())
        } else {
            T::zero()
        }
    }

    /// Inverse of the enthalpy, extended by zero for negative levels.
    pub fn density_for_level(&self, level: T) -> T {
        if level > T::zero() {
            ((self.m - T::one()) / (self.a * self.m) * level).powf(T::one() / (self.m - T::one()))
        } else {
            T::zero()
        }
    }

    pub(crate) fn plan(&self) -> Result<ConvolutionPlan<T>> {
        ConvolutionPlan::new(&self.grid, &self.kernel, &AlignmentKernel::Zero, ConvolutionMethod::Spectral)
    }

    pub(crate) fn confinement_samples(&self) -> Result<Vec<T>> {
        let g = &self.grid;
        (0..g.len())
            .map(|c| {
                if self.confinement.is_zero() {
                    Ok(T::zero())
                } else {
                    self.confinement.value(g.center(c))
                }
            })
            .collect()
    }

    /// `K∗ϱ + Φ`.
    pub(crate) fn potential(&self, plan: &ConvolutionPlan<T>, phi: &[T], rho: &ScalarField<T>) -> Result<Vec<T>> {
        let mut v = phi.to_vec();
        if !self.kernel.is_zero() {
            let k = plan.conv_scalar(rho, Channel::Interaction)?;
            for (vi, ki) in v.iter_mut().zip(k.values()) {
                *vi = *vi + *ki;
            }
        }
        Ok(v)
    }

    /// Free energy `∫ a/(m-1) ϱ^m + ½ϱK∗ϱ + ϱΦ`.
    pub fn free_energy(&self, rho: &ScalarField<T>) -> Result<T> {
        let plan = self.plan()?;
        let phi = self.confinement_samples()?;
        self.free_energy_with(&plan, &phi, rho)
    }

    pub(crate) fn free_energy_with(&self, plan: &ConvolutionPlan<T>, phi: &[T], rho: &ScalarField<T>) -> Result<T> {
        let k = if self.kernel.is_zero() {
            vec![T::zero(); rho.values().len()]
        } else {
            plan.conv_scalar(rho, Channel::Interaction)?.into_values()
        };
        let mut sum = T::zero();
        for (c, &r) in rho.values().iter().enumerate() {
            if r > T::zero() {
                sum = sum + self.a / (self.m - T::one()) * r.powf(self.m) + r * (T::lit(0.5) * k[c] + phi[c]);
            }
        }
        Ok(sum * self.grid.cell_volume())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SteadyOptions<T> {
    /// Fixed point: stop when successive iterates differ by less than this in L¹.
    pub tol_fp: T,
    pub max_iter: usize,
    pub omega: T,
    /// Gradient flow: stop when `|dF/dt| / |F|` falls below this.
    pub tol_gf: T,
    pub max_time: T,
    pub cfl: T,
    pub dt_min: T,
    /// Gradient flow: an energy increase above `energy_slack · |F|` is a scheme failure.
    pub energy_slack: T,
}

impl<T: Real> Default for SteadyOptions<T> {
    fn default() -> Self {
        SteadyOptions {
            tol_fp: T::lit(1e-12),
            max_iter: 20_000,
            omega: T::lit(0.5),
            tol_gf: T::lit(1e-9),
            max_time: T::lit(1e4),
            cfl: T::lit(0.45),
            dt_min: T::lit(1e-14),
            energy_slack: T::lit(1e-12),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SteadySolution<T> {
    pub rho: ScalarField<T>,
    /// Level `C` of `am/(m-1) ϱ^{m-1} + K∗ϱ + Φ` on the support.
    pub level: T,
    /// Largest deviation from the level on support cells.
    pub level_residual: T,
    /// Largest amount by which `K∗ϱ + Φ` drops below the level off the support.
    pub obstacle_residual: T,
    /// L¹ norm of the discrete force balance on faces.
    pub balance_residual: T,
    pub support: Vec<bool>,
    pub components: usize,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Real> SteadySolution<T> {
    pub fn support_cells(&self) -> usize {
        self.support.iter().filter(|&&s| s).count()
    }
}

/// Mass of the profile `ϱ = h((C - V)₊)` with `h` the inverse enthalpy.
fn mass_at_level<T: Real>(prob: &SteadyProblem<T>, v: &[T], level: T) -> T {
    let g = &prob.grid;
    let sum: T = (0..g.len())
        .filter(|&c| g.is_active(c))
        .map(|c| prob.density_for_level(level - v[c]))
        .sum();
    sum * g.cell_volume()
}

/// Bisection for the level whose profile carries the target mass.
fn level_for_mass<T: Real>(prob: &SteadyProblem<T>, v: &[T]) -> Result<T> {
    let g = &prob.grid;
    let vmin = (0..g.len())
        .filter(|&c| g.is_active(c))
        .map(|c| v[c])
        .fold(T::infinity(), T::min);
    let mut lo = vmin;
    let mut step = T::one();
    let mut hi = vmin + step;
    let mut curve = Vec::new();
    loop {
        let mass = mass_at_level(prob, v, hi);
        curve.push((hi.to_f64_lossy(), mass.to_f64_lossy()));
        if mass >= prob.mass {
            break;
        }
        if curve.len() > 200 || !mass.is_finite() {
            return Err(Error::BracketFailure { curve });
        }
        lo = hi;
        step = step + step;
        hi = vmin + step;
    }
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass_at_level(prob, v, mid) < prob.mass {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

/// Profile at the mass-matching level, rescaled so the discrete mass is exact.
fn profile<T: Real>(prob: &SteadyProblem<T>, v: &[T]) -> Result<(Vec<T>, T)> {
    let level = level_for_mass(prob, v)?;
    let g = &prob.grid;
    let mut rho: Vec<T> = (0..g.len())
        .map(|c| {
            if g.is_active(c) {
                prob.density_for_level(level - v[c])
            } else {
                T::zero()
            }
        })
        .collect();
    let mass: T = rho.iter().copied().sum::<T>() * g.cell_volume();
    if mass > T::zero() {
        let s = prob.mass / mass;
        for r in rho.iter_mut() {
            *r = *r * s;
        }
    }
    Ok((rho, level))
}

/// Damped fixed-point iteration `ϱ ← (1-ω)ϱ + ω h((C - K∗ϱ - Φ)₊)` with the
/// level `C` re-bisected every iterate for exact mass. The result is moved by
/// whole cells so its centre of mass lands nearest to the requested centre.
pub fn solve_fixed_point<T: Real>(prob: &SteadyProblem<T>, opts: &SteadyOptions<T>) -> Result<SteadySolution<T>> {
    prob.validate()?;
    if !(opts.omega > T::zero() && opts.omega <= T::one()) {
        return Err(invalid("omega", "must lie in (0, 1]"));
    }
    let g = &prob.grid;
    let plan = prob.plan()?;
    let phi = prob.confinement_samples()?;
    let vol = g.cell_volume();

    let zero = ScalarField::zeros(g);
    let (mut rho, _) = profile(prob, &prob.potential(&plan, &phi, &zero)?)?;
    let mut omega = opts.omega;
    let mut last_change = T::infinity();
    let mut growth = 0;
    let mut best = (T::infinity(), rho.clone());
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        let field = ScalarField::new(g, rho.clone())?;
        let (target, _) = profile(prob, &prob.potential(&plan, &phi, &field)?)?;
        let mut change = T::zero();
        let undamped = target.clone();
        for (r, t) in rho.iter_mut().zip(&target) {
            let next = (T::one() - omega) * *r + omega * *t;
            change = change + (next - *r).abs();
            *r = next;
        }
        change = change * vol;
        if change < best.0 {
            best = (change, rho.clone());
        }
        if change < opts.tol_fp {
            // The undamped update has exact zeros off the support.
            rho = undamped;
            converged = true;
            break;
        }
        if change > last_change {
            growth += 1;
            if growth == 2 {
                omega = omega * T::lit(0.5);
                growth = 0;
            }
        } else {
            growth = 0;
        }
        last_change = change;
    }
    if !converged {
        rho = best.1;
    }
    let rho = ScalarField::new(g, rho)?;
    let rho = recentre(prob, rho);
    finish(prob, &plan, &phi, rho, iterations, converged)
}

fn recentre<T: Real>(prob: &SteadyProblem<T>, rho: ScalarField<T>) -> ScalarField<T> {
    let g = &prob.grid;
    let mass = rho.integral();
    if mass <= T::zero() {
        return rho;
    }
    let mut shift = [0isize; 2];
    for (axis, s) in shift.iter_mut().enumerate().take(g.dim()) {
        let x: T = (0..g.len()).map(|c| g.center(c)[axis] * rho.values()[c]).sum::<T>() * g.cell_volume() / mass;
        *s = ((prob.centre[axis] - x) / g.h(axis)).round().to_isize().unwrap_or(0);
    }
    if shift == [0, 0] {
        return rho;
    }
    let (moved, lost) = rho.shifted(shift);
    if lost > T::zero() {
        rho
    } else {
        moved
    }
}

/// Level, residuals and support of a candidate stationary density.
pub(crate) fn finish<T: Real>(
    prob: &SteadyProblem<T>,
    plan: &ConvolutionPlan<T>,
    phi: &[T],
    rho: ScalarField<T>,
    iterations: usize,
    converged: bool,
) -> Result<SteadySolution<T>> {
    let g = &prob.grid;
    let v = prob.potential(plan, phi, &rho)?;
    let r = rho.values();
    let support: Vec<bool> = r.iter().map(|&x| x > T::zero()).collect();

    // The level is the mass-weighted mean of the first integral over the support.
    let mut num = T::zero();
    let mut den = T::zero();
    for c in 0..g.len() {
        if support[c] {
            num = num + r[c] * (prob.enthalpy(r[c]) + v[c]);
            den = den + r[c];
        }
    }
    let level = if den > T::zero() { num / den } else { T::zero() };
    let mut level_residual = T::zero();
    let mut obstacle_residual = T::zero();
    for c in (0..g.len()).filter(|&c| g.is_active(c)) {
        if support[c] {
            level_residual = max_of(level_residual, (prob.enthalpy(r[c]) + v[c] - level).abs());
        } else {
            obstacle_residual = max_of(obstacle_residual, (level - v[c]).pos());
        }
    }

    let mut balance = T::zero();
    for axis in 0..g.dim() {
        let h = g.h(axis);
        for &(c, n) in g.open_faces(axis) {
            let dp = prob.a * (r[n].powf(prob.m) - r[c].powf(prob.m)) / h;
            let f = dp + T::lit(0.5) * (r[c] + r[n]) * (v[n] - v[c]) / h;
            balance = balance + f.abs();
        }
    }
    balance = balance * g.cell_volume();

    Ok(SteadySolution {
        components: count_components(g, &support),
        rho,
        level,
        level_residual,
        obstacle_residual,
        balance_residual: balance,
        support,
        iterations,
        converged,
    })
}

fn count_components<T: Real>(g: &Grid<T>, support: &[bool]) -> usize {
    let mut seen = vec![false; support.len()];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..support.len() {
        if !support[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(c) = stack.pop() {
            for axis in 0..g.dim() {
                for side in [-1, 1] {
                    if let Some(n) = g.neighbor(c, axis, side) {
                        if support[n] && !seen[n] {
                            seen[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    count
}
