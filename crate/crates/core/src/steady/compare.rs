use crate::error::{invalid, Error, Result};
use crate::fields::{first_moment, lp_distance, total_mass, total_momentum, State, VectorField};
use crate::potentials::ConfinementSpec;
use crate::scalar::Real;

use super::SteadySolution;

/// `‖ϱ(tₙ) - ϱ_s(· - c₀)‖_{L^m}` for every snapshot.
///
/// The stationary density is moved by the whole number of cells nearest to
/// `c₀` minus its own centre of mass. Without `c0` the centre of mass of the
/// last snapshot is used.
pub fn omega_limit_distance<T: Real>(
    snapshots: &[State<T>],
    sol: &SteadySolution<T>,
    c0: Option<[T; 2]>,
    m: T,
) -> Result<Vec<(T, T)>> {
    let Some(last) = snapshots.last() else {
        return Ok(Vec::new());
    };
    let g = sol.rho.grid();
    for s in snapshots {
        s.rho.check_grid(g)?;
    }
    let c0 = match c0 {
        Some(c) => c,
        None => centre_of(last),
    };
    let mass = sol.rho.integral();
    let mut shift = [0isize; 2];
    for (axis, s) in shift.iter_mut().enumerate().take(g.dim()) {
        let own: T =
            (0..g.len()).map(|c| g.center(c)[axis] * sol.rho.values()[c]).sum::<T>() * g.cell_volume() / mass;
        *s = ((c0[axis] - own) / g.h(axis)).round().to_isize().unwrap_or(0);
    }
    let (target, _) = sol.rho.shifted(shift);
    snapshots
        .iter()
        .map(|s| Ok((s.time, lp_distance(&s.rho, &target, m)?)))
        .collect()
}

fn centre_of<T: Real>(s: &State<T>) -> [T; 2] {
    let m = total_mass(s);
    let x = first_moment(s);
    [x[0] / m, x[1] / m]
}

/// Which first-moment ODE applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComCase<T> {
    /// `Φ = k|x|²/2` with unit linear damping: `X'' + X' + kX = 0`.
    Quadratic { stiffness: T },
    /// `Φ = 0`, unit linear damping, symmetric domain: `X' = P`, `P' = -P`.
    NoConfinement,
    /// `Φ = 0` with alignment damping only: `P` is conserved.
    Alignment,
}

/// First moment `X = ∫xϱ` and momentum `P = ∫m` at time `t`, per axis.
pub fn com_trajectory<T: Real>(case: ComCase<T>, x0: [T; 2], p0: [T; 2], t: T) -> Result<([T; 2], [T; 2])> {
    let mut x = [T::zero(); 2];
    let mut p = [T::zero(); 2];
    for a in 0..2 {
        let (xa, pa) = match case {
            ComCase::NoConfinement => {
                let e = (-t).exp();
                (x0[a] + (T::one() - e) * p0[a], e * p0[a])
            }
            ComCase::Alignment => (x0[a] + t * p0[a], p0[a]),
            ComCase::Quadratic { stiffness } => oscillator(stiffness, x0[a], p0[a], t)?,
        };
        x[a] = xa;
        p[a] = pa;
    }
    Ok((x, p))
}

/// Solution of `X'' + X' + kX = 0` and its derivative.
fn oscillator<T: Real>(k: T, x0: T, v0: T, t: T) -> Result<(T, T)> {
    if !(k > T::zero()) {
        return Err(invalid("stiffness", "must be positive"));
    }
    let half = T::lit(0.5);
    let disc = T::one() - T::lit(4.0) * k;
    let e = (-half * t).exp();
    let b = v0 + half * x0;
    if disc < T::zero() {
        let w = half * (-disc).sqrt();
        let (s, c) = (w * t).sin_cos();
        let x = e * (x0 * c + b / w * s);
        let v = -half * x + e * (-x0 * w * s + b * c);
        Ok((x, v))
    } else if disc > T::zero() {
        let w = half * disc.sqrt();
        let (s, c) = ((w * t).sinh(), (w * t).cosh());
        let x = e * (x0 * c + b / w * s);
        let v = -half * x + e * (x0 * w * s + b * c);
        Ok((x, v))
    } else {
        let x = e * (x0 + b * t);
        Ok((x, -half * x + e * b))
    }
}

/// A trajectory seen from the frame moving with the flock velocity.
#[derive(Clone, Debug)]
pub struct FlockFrame<T> {
    pub states: Vec<State<T>>,
    /// `P₀ / M₀`.
    pub velocity: [T; 2],
    /// The velocity actually used: an integer number of cells per frame.
    pub rounded_velocity: [T; 2],
    pub cells_per_frame: [isize; 2],
}

/// Transforms equally spaced snapshots of a confinement-free run to the
/// coordinates `y = x - u∞t`, `u∞ = P₀/M₀`, by whole-cell shifts. The momentum
/// in the new frame is `m - ϱ ũ∞` with `ũ∞` the rounded velocity.
pub fn flock_frame<T: Real>(
    snapshots: &[State<T>],
    confinement: &ConfinementSpec<T>,
    m0: T,
) -> Result<FlockFrame<T>> {
    if !confinement.is_zero() {
        return Err(Error::ConfinementPresent);
    }
    if !(m0 > T::zero()) {
        return Err(invalid("m0", "must be positive"));
    }
    let Some(first) = snapshots.first() else {
        return Err(invalid("snapshots", "need at least one"));
    };
    let g = first.grid();
    let p0 = total_momentum(first);
    let velocity = [p0[0] / m0, p0[1] / m0];
    let frame = if snapshots.len() > 1 {
        snapshots[1].time - first.time
    } else {
        T::zero()
    };
    for w in snapshots.windows(2) {
        let gap = w[1].time - w[0].time;
        if (gap - frame).abs() > T::lit(1e-9) * (T::one() + frame.abs()) {
            return Err(invalid("snapshots", "frames must be equally spaced"));
        }
    }
    let mut cells = [0isize; 2];
    let mut rounded = [T::zero(); 2];
    if frame > T::zero() {
        for a in 0..g.dim() {
            let k = (velocity[a] * frame / g.h(a)).round();
            cells[a] = k.to_isize().unwrap_or(0);
            rounded[a] = k * g.h(a) / frame;
        }
    }
    let states = snapshots
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let n = n as isize;
            let shift = [-n * cells[0], -n * cells[1]];
            let (rho, _) = s.rho.shifted(shift);
            let mom = s.mom.shifted(shift);
            let mom: Vec<[T; 2]> = mom
                .values()
                .iter()
                .zip(rho.values())
                .map(|(m, &r)| [m[0] - r * rounded[0], m[1] - r * rounded[1]])
                .collect();
            State::new(s.time, rho, VectorField::new(g, mom)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FlockFrame {
        states,
        velocity,
        rounded_velocity: rounded,
        cells_per_frame: cells,
    })
}
