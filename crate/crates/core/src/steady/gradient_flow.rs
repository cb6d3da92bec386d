use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::nonlocal::Channel;
use crate::scalar::{max_of, Real};

use super::{finish, recentre, SteadyOptions, SteadyProblem, SteadySolution};

/// Runs `∂ₜϱ = div(ϱ∇ξ)`, `ξ = am/(m-1) ϱ^{m-1} + K∗ϱ + Φ`, with an explicit
/// upwind finite-volume scheme until the free energy stalls.
///
/// Face velocities are `-Δξ/h` and each face carries the density of its upwind
/// cell, so positivity holds under the step restriction and the discrete
/// stationary states are exactly the densities whose `ξ` is constant across
/// every face with mass on its upwind side.
///
/// Without `initial` the flow starts from a Gaussian of unit width at the
/// target centre.
pub fn solve_gradient_flow<T: Real>(
    prob: &SteadyProblem<T>,
    opts: &SteadyOptions<T>,
    initial: Option<&ScalarField<T>>,
) -> Result<SteadySolution<T>> {
    prob.validate()?;
    let g = &prob.grid;
    let plan = prob.plan()?;
    let phi = prob.confinement_samples()?;
    let vol = g.cell_volume();
    let dim = g.dim();

    let mut rho: Vec<T> = match initial {
        Some(f) => {
            f.check_grid(g)?;
            f.values().to_vec()
        }
        None => (0..g.len())
            .map(|c| {
                if !g.is_active(c) {
                    return T::zero();
                }
                let x = g.center(c);
                let r2: T = (0..dim).map(|a| (x[a] - prob.centre[a]).powi(2)).sum();
                (-r2).exp()
            })
            .collect(),
    };
    let mass: T = rho.iter().copied().sum::<T>() * vol;
    if !(mass > T::zero()) {
        return Err(crate::error::invalid("initial", "needs positive mass"));
    }
    for r in rho.iter_mut() {
        *r = *r * prob.mass / mass;
    }

    let conv = |rho: &[T]| -> Result<Vec<T>> {
        if prob.kernel.is_zero() {
            Ok(vec![T::zero(); rho.len()])
        } else {
            let f = ScalarField::new(g, rho.to_vec())?;
            Ok(plan.conv_scalar(&f, Channel::Interaction)?.into_values())
        }
    };
    let energy = |rho: &[T], k: &[T]| -> (T, T) {
        let mut f = T::zero();
        let mut internal = T::zero();
        for c in 0..rho.len() {
            let r = rho[c];
            if r > T::zero() {
                let e = prob.a / (prob.m - T::one()) * r.powf(prob.m);
                internal = internal + e;
                f = f + e + r * (T::lit(0.5) * k[c] + phi[c]);
            }
        }
        (f * vol, internal * vol)
    };

    let mut k = conv(&rho)?;
    let (mut f_now, _) = energy(&rho, &k);
    let mut time = T::zero();
    let mut steps = 0;
    let mut converged = false;
    let mut next = rho.clone();
    while time < opts.max_time {
        let xi: Vec<T> = (0..g.len()).map(|c| prob.enthalpy(rho[c]) + k[c] + phi[c]).collect();
        let mut vmax = T::zero();
        let mut diff = T::zero();
        for axis in 0..dim {
            let h = g.h(axis);
            for &(c, n) in g.open_faces(axis) {
                vmax = max_of(vmax, (xi[n] - xi[c]).abs() / h);
            }
        }
        for &r in &rho {
            if r > T::zero() {
                diff = max_of(diff, prob.a * prob.m * r.powf(prob.m - T::one()));
            }
        }
        let hmin = (0..dim).map(|a| g.h(a)).fold(T::infinity(), T::min);
        let two_d = T::lit(2.0 * dim as f64);
        let mut dt = opts.cfl * hmin / (two_d * vmax.max(T::epsilon()));
        if diff > T::zero() {
            dt = dt.min(opts.cfl * hmin * hmin / (two_d * diff));
        }
        if dt < opts.dt_min {
            return Err(Error::DtUnderflow {
                dt: dt.to_f64_lossy(),
                floor: opts.dt_min.to_f64_lossy(),
            });
        }

        loop {
            next.copy_from_slice(&rho);
            for axis in 0..dim {
                let lam = dt / g.h(axis);
                for &(c, n) in g.open_faces(axis) {
                    let v = -(xi[n] - xi[c]) / g.h(axis);
                    let flux = if v > T::zero() { v * rho[c] } else { v * rho[n] };
                    next[c] = next[c] - lam * flux;
                    next[n] = next[n] + lam * flux;
                }
            }
            for r in next.iter_mut() {
                *r = r.pos();
            }
            let k_next = conv(&next)?;
            let (f_next, internal) = energy(&next, &k_next);
            let scale = max_of(f_now.abs(), internal);
            let increase = f_next - f_now;
            if increase > opts.energy_slack * scale {
                dt = dt * T::lit(0.5);
                if dt < opts.dt_min {
                    return Err(Error::EnergyIncrease {
                        time: time.to_f64_lossy(),
                        increase: increase.to_f64_lossy(),
                    });
                }
                continue;
            }
            std::mem::swap(&mut rho, &mut next);
            k = k_next;
            time = time + dt;
            steps += 1;
            let rate = increase.abs() / (dt * scale.max(T::min_positive_value()));
            f_now = f_next;
            if rate < opts.tol_gf {
                converged = true;
            }
            break;
        }
        if converged {
            break;
        }
    }

    let rho = recentre(prob, ScalarField::new(g, rho)?);
    finish(prob, &plan, &phi, rho, steps, converged)
}
