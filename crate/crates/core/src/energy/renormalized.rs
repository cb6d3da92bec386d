//! Weak residual of the renormalized continuity equation
//! `∂_t b(rho) + div(b(rho) u) + (b'(rho) rho - b(rho)) div u = 0`
//! tested against a small fixed family of smooth space-time bumps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::vacuum_floor;
use crate::error::{invalid, Error, Result};
use crate::fields::{Grid, State};
use crate::quadrature::composite;
use crate::scalar::Real;

/// A renormalization function `b` with derivative `b'`.
pub trait Renormalization<T: Real> {
    fn value(&self, z: T) -> T;
    fn derivative(&self, z: T) -> T;
    /// Level beyond which `b'` vanishes. `None` is only acceptable for affine `b`.
    fn flat_beyond(&self) -> Option<T>;
    fn is_affine(&self) -> bool {
        false
    }
}

/// `b(z) = slope · z`. Reduces the residual to the plain continuity residual.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineRenormalization<T> {
    pub slope: T,
}

impl<T: Real> Renormalization<T> for AffineRenormalization<T> {
    fn value(&self, z: T) -> T {
        self.slope * z
    }
    fn derivative(&self, _z: T) -> T {
        self.slope
    }
    fn flat_beyond(&self) -> Option<T> {
        None
    }
    fn is_affine(&self) -> bool {
        true
    }
}

/// `C¹` version of `min(z, level)²`: `b'(z) = 2z (1 - S((z - level)/width))`
/// with the smoothstep `S`, so `b'` vanishes for `z >= level + width`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothCapSquare<T> {
    pub level: T,
    pub width: T,
}

impl<T: Real> SmoothCapSquare<T> {
    pub fn new(level: T, width: T) -> Result<Self> {
        if !(level > T::zero()) || !(width > T::zero()) {
            return Err(invalid("renormalization", "level and width must be positive"));
        }
        Ok(SmoothCapSquare { level, width })
    }
}

fn smoothstep<T: Real>(s: T) -> T {
    if s <= T::zero() {
        T::zero()
    } else if s >= T::one() {
        T::one()
    } else {
        s * s * (T::lit(3.0) - T::lit(2.0) * s)
    }
}

impl<T: Real> Renormalization<T> for SmoothCapSquare<T> {
    fn value(&self, z: T) -> T {
        if z <= self.level {
            return z * z;
        }
        let top = z.min(self.level + self.width);
        self.level * self.level + composite(self.level, top, 4, |y| self.derivative(y))
    }
    fn derivative(&self, z: T) -> T {
        T::lit(2.0) * z * (T::one() - smoothstep((z - self.level) / self.width))
    }
    fn flat_beyond(&self) -> Option<T> {
        Some(self.level + self.width)
    }
}

/// User supplied `b`, `b'` and flatness level.
pub struct ClosureRenormalization<T, F, G> {
    pub b: F,
    pub db: G,
    pub flat: Option<T>,
}

impl<T: Real, F: Fn(T) -> T, G: Fn(T) -> T> Renormalization<T> for ClosureRenormalization<T, F, G> {
    fn value(&self, z: T) -> T {
        (self.b)(z)
    }
    fn derivative(&self, z: T) -> T {
        (self.db)(z)
    }
    fn flat_beyond(&self) -> Option<T> {
        self.flat
    }
}

fn check_flat<T: Real>(b: &dyn Renormalization<T>) -> Result<()> {
    if b.is_affine() {
        return Ok(());
    }
    let level = b.flat_beyond().ok_or(Error::NotFlat {
        at: f64::INFINITY,
        slope: f64::NAN,
    })?;
    if !(level > T::zero()) {
        return Err(invalid("renormalization", "flatness level must be positive"));
    }
    for k in 0..=48 {
        let z = level * (T::one() + T::from_usize_lossy(k) / T::lit(16.0));
        let slope = b.derivative(z);
        if slope.abs() > T::epsilon() {
            return Err(Error::NotFlat {
                at: z.to_f64_lossy(),
                slope: slope.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

fn bump<T: Real>(s: T) -> (T, T) {
    let s2 = s * s;
    if s2 >= T::one() {
        return (T::zero(), T::zero());
    }
    let q = T::one() - s2;
    let v = (T::one() - q.recip()).exp();
    (v, v * (-T::lit(2.0) * s / (q * q)))
}

/// Tensor-product test functions: three spatial bumps times three temporal bumps.
#[derive(Clone, Debug, PartialEq)]
pub struct TestBasis<T> {
    /// Centre and radius of each spatial bump.
    pub space: Vec<([T; 2], T)>,
    /// Centre and radius of each temporal bump.
    pub time: Vec<(T, T)>,
}

impl<T: Real> TestBasis<T> {
    /// Bumps of radius `L/2` at `x = -L/3, 0, L/3` and temporal bumps covering
    /// the middle of `[t0, t1]`.
    pub fn standard(grid: &Grid<T>, t0: T, t1: T) -> Self {
        Self::build(grid, t0, t1, [T::zero(); 3], [T::zero(); 3])
    }

    /// Standard basis with centres jittered by a seeded generator.
    pub fn seeded(grid: &Grid<T>, t0: T, t1: T, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sx = [T::zero(); 3];
        let mut st = [T::zero(); 3];
        for v in sx.iter_mut() {
            *v = T::lit(rng.random_range(-0.125..0.125));
        }
        for v in st.iter_mut() {
            *v = T::lit(rng.random_range(-0.05..0.05));
        }
        Self::build(grid, t0, t1, sx, st)
    }

    fn build(grid: &Grid<T>, t0: T, t1: T, jitter_x: [T; 3], jitter_t: [T; 3]) -> Self {
        let l = grid.half_width(0);
        let ly = if grid.dim() == 2 { grid.half_width(1) } else { T::zero() };
        let third = T::lit(1.0 / 3.0);
        let offsets = [-third, T::zero(), third];
        let space = offsets
            .iter()
            .zip(jitter_x)
            .map(|(&o, j)| ([(o + j) * l, T::lit(0.5) * o * ly], T::lit(0.5) * l))
            .collect();
        let span = t1 - t0;
        let time = [0.3, 0.5, 0.7]
            .iter()
            .zip(jitter_t)
            .map(|(&c, j)| (t0 + (T::lit(c) + j) * span, T::lit(0.25) * span))
            .collect();
        TestBasis { space, time }
    }
}

/// Largest absolute weak residual over the test basis. Snapshots must be
/// equally spaced in time.
pub fn renormalized_residual<T: Real>(
    snapshots: &[State<T>],
    b: &dyn Renormalization<T>,
    basis: &TestBasis<T>,
) -> Result<T> {
    check_flat(b)?;
    if snapshots.len() < 2 {
        return Err(invalid("snapshots", "need at least two snapshots"));
    }
    let step = snapshots[1].time - snapshots[0].time;
    if !(step > T::zero()) {
        return Err(invalid("snapshots", "times must increase"));
    }
    for w in snapshots.windows(2) {
        if ((w[1].time - w[0].time) - step).abs() > T::lit(1e-9) * step {
            return Err(invalid("snapshots", "cadence must be uniform"));
        }
    }
    let grid = snapshots[0].grid();
    for s in snapshots {
        s.rho.check_grid(grid)?;
    }
    let dim = grid.dim();
    let vol = grid.cell_volume();
    let len = grid.len();

    // Per spatial bump: φ and ∇φ at cell centres.
    let shapes: Vec<Vec<(T, [T; 2])>> = basis
        .space
        .iter()
        .map(|&(c, r)| {
            (0..len)
                .map(|cell| {
                    let x = grid.center(cell);
                    let d = [x[0] - c[0], x[1] - c[1]];
                    let dist = (d[0] * d[0] + d[1] * d[1]).sqrt();
                    let (v, dv) = bump(dist / r);
                    let g = if dist > T::zero() {
                        [dv / r * d[0] / dist, dv / r * d[1] / dist]
                    } else {
                        [T::zero(); 2]
                    };
                    (v, g)
                })
                .collect()
        })
        .collect();

    // B_n = Σ b φ h^d and F_n = Σ (b u·∇φ - (b'ρ - b) div u φ) h^d per snapshot and bump.
    let mut held = vec![vec![T::zero(); snapshots.len()]; shapes.len()];
    let mut flux = vec![vec![T::zero(); snapshots.len()]; shapes.len()];
    for (n, s) in snapshots.iter().enumerate() {
        let u = s.velocity(vacuum_floor(s));
        let u = u.values();
        let rho = s.rho.values();
        let div: Vec<T> = (0..len)
            .map(|c| {
                if !grid.is_active(c) {
                    return T::zero();
                }
                let mut acc = T::zero();
                for a in 0..dim {
                    let get = |side: i32| {
                        grid.neighbor(c, a, side)
                            .map(|nb| if grid.is_active(nb) { u[nb][a] } else { T::zero() })
                    };
                    let h = grid.h(a);
                    acc = acc
                        + match (get(-1), get(1)) {
                            (Some(l), Some(r)) => (r - l) / (T::lit(2.0) * h),
                            (None, Some(r)) => (r - u[c][a]) / h,
                            (Some(l), None) => (u[c][a] - l) / h,
                            (None, None) => T::zero(),
                        };
                }
                acc
            })
            .collect();
        for (k, shape) in shapes.iter().enumerate() {
            let mut bh = T::zero();
            let mut fx = T::zero();
            for c in 0..len {
                let r = rho[c];
                let bv = b.value(r);
                let (phi, g) = shape[c];
                if phi == T::zero() && g[0] == T::zero() && g[1] == T::zero() {
                    continue;
                }
                bh = bh + bv * phi;
                let adv = (0..dim).map(|a| u[c][a] * g[a]).sum::<T>();
                fx = fx + bv * adv - (b.derivative(r) * r - bv) * div[c] * phi;
            }
            held[k][n] = bh * vol;
            flux[k][n] = fx * vol;
        }
    }

    let mut worst = T::zero();
    for (k, _) in shapes.iter().enumerate() {
        for &(tc, tr) in &basis.time {
            let tf = |t: T| bump((t - tc) / tr).0;
            let mut acc = T::zero();
            for n in 0..snapshots.len() - 1 {
                let (ta, tb) = (snapshots[n].time, snapshots[n + 1].time);
                let (fa, fb) = (tf(ta), tf(tb));
                acc = acc - (held[k][n + 1] - held[k][n]) * T::lit(0.5) * (fa + fb);
                acc = acc + T::lit(0.5) * (tb - ta) * (fa * flux[k][n] + fb * flux[k][n + 1]);
            }
            worst = worst.max(acc.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ScalarField;

    #[test]
    fn cap_square_is_c1_and_flat() {
        let b = SmoothCapSquare::<f64>::new(1.0, 0.5).unwrap();
        assert_eq!(b.value(0.5), 0.25);
        let z = 1.2;
        let fd = (b.value(z + 1e-6) - b.value(z - 1e-6)) / 2e-6;
        assert!((fd - b.derivative(z)).abs() < 1e-6);
        assert!(check_flat(&b).is_ok());
        assert_eq!(b.derivative(2.0), 0.0);
    }

    #[test]
    fn non_flat_b_is_rejected() {
        let b = ClosureRenormalization {
            b: |z: f64| z * z,
            db: |z: f64| 2.0 * z,
            flat: Some(1.0),
        };
        assert!(matches!(check_flat(&b), Err(Error::NotFlat { .. })));
    }

    #[test]
    fn steady_uniform_state_has_zero_residual() {
        let g = Grid::<f64>::line(32, 2.0).unwrap();
        let snaps: Vec<State<f64>> = (0..6)
            .map(|k| State::at_rest(0.1 * k as f64, ScalarField::from_fn(&g, |_| 0.7)).unwrap())
            .collect();
        let basis = TestBasis::standard(&g, 0.0, 0.5);
        let b = SmoothCapSquare::new(1.0, 0.5).unwrap();
        assert!(renormalized_residual(&snaps, &b, &basis).unwrap() < 1e-14);
    }

    #[test]
    fn seeded_basis_is_reproducible() {
        let g = Grid::<f64>::line(32, 2.0).unwrap();
        assert_eq!(TestBasis::seeded(&g, 0.0, 1.0, 7), TestBasis::seeded(&g, 0.0, 1.0, 7));
        assert_ne!(TestBasis::seeded(&g, 0.0, 1.0, 7), TestBasis::seeded(&g, 0.0, 1.0, 8));
    }
}
