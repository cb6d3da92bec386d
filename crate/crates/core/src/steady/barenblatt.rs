use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::fields::{Grid, ScalarField};
use crate::scalar::Real;

/// Closed-form stationary profile for `K = 0`, `Φ = k|x|²/2`:
/// `ϱ(x) = A (C - k|x|²/2)₊^{1/(m-1)}` with `A = ((m-1)/(am))^{1/(m-1)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Barenblatt<T> {
    pub a: T,
    pub m: T,
    pub stiffness: T,
    pub dim: usize,
    /// The level `C` of the enthalpy plus confinement.
    pub level: T,
}

impl<T: Real> Barenblatt<T> {
    pub fn with_mass(a: T, m: T, stiffness: T, dim: usize, mass: T) -> Result<Self> {
        if !(m > T::one()) || !(a > T::zero()) || !(stiffness > T::zero()) || !(mass > T::zero()) {
            return Err(invalid("barenblatt", "needs m > 1 and positive a, stiffness and mass"));
        }
        if dim != 1 && dim != 2 {
            return Err(invalid("dim", "must be 1 or 2"));
        }
        let k = 1.0 / (m.to_f64_lossy() - 1.0);
        let d = dim as f64;
        let amp = Self::amplitude_of(a, m).to_f64_lossy();
        // ∫(C - s|x|²/2)₊^k dx = C^{k+d/2} (2π/s)^{d/2} Γ(k+1)/Γ(k+1+d/2)
        let s = stiffness.to_f64_lossy();
        let unit = amp * (2.0 * std::f64::consts::PI / s).powf(d / 2.0) * gamma(k + 1.0) / gamma(k + 1.0 + d / 2.0);
        let level = (mass.to_f64_lossy() / unit).powf(1.0 / (k + d / 2.0));
        Ok(Barenblatt {
            a,
            m,
            stiffness,
            dim,
            level: T::lit(level),
        })
    }

    fn amplitude_of(a: T, m: T) -> T {
        ((m - T::one()) / (a * m)).powf(T::one() / (m - T::one()))
    }

    pub fn eval(&self, x: [T; 2]) -> T {
        let r2 = x[0] * x[0] + if self.dim > 1 { x[1] * x[1] } else { T::zero() };
        let z = self.level - self.stiffness * r2 * T::lit(0.5);
        if z > T::zero() {
            Self::amplitude_of(self.a, self.m) * z.powf(T::one() / (self.m - T::one()))
        } else {
            T::zero()
        }
    }

    pub fn peak(&self) -> T {
        self.eval([T::zero(); 2])
    }

    pub fn support_radius(&self) -> T {
        (T::lit(2.0) * self.level / self.stiffness).sqrt()
    }

    /// Cell averages by Gauss–Legendre quadrature on each cell (1D) or cell-centre values (2D).
    pub fn sample(&self, grid: &std::sync::Arc<Grid<T>>) -> ScalarField<T> {
        if grid.dim() == 1 {
            let h = grid.h(0);
            ScalarField::from_fn(grid, |x| {
                let (lo, hi) = (x[0] - h * T::lit(0.5), x[0] + h * T::lit(0.5));
                let r = self.support_radius();
                let (lo_c, hi_c) = (lo.max(-r), hi.min(r));
                if hi_c <= lo_c {
                    return T::zero();
                }
                crate::quadrature::gauss_legendre(lo_c, hi_c, |s| self.eval([s, T::zero()])) / h
            })
        } else {
            ScalarField::from_fn(grid, |x| self.eval(x))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_pressure_profile_by_hand() {
        // m = 2, a = 1: ϱ = (C - x²/2)/2 = P - x²/4 with (8/3) P^{3/2} = 1.
        let b = Barenblatt::with_mass(1.0, 2.0, 1.0, 1, 1.0).unwrap();
        assert!((b.peak() - (3.0f64 / 8.0).powf(2.0 / 3.0)).abs() < 1e-14);
        assert!((b.eval([0.5, 0.0]) - (b.peak() - 0.0625)).abs() < 1e-14);
        assert!((b.support_radius() - 2.0 * b.peak().sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sampled_mass_matches() {
        for (m, dim, n) in [(2.0, 1, 400), (3.0, 1, 400), (2.0, 2, 200)] {
            let grid = Grid::new(dim, n, 4.0, crate::fields::DomainKind::Box).unwrap();
            let b = Barenblatt::<f64>::with_mass(1.0, m, 1.0, dim, 0.7).unwrap();
            let mass = b.sample(&grid).integral();
            assert!((mass - 0.7).abs() < 2e-3, "m {m} dim {dim}: {mass}");
        }
    }
}
