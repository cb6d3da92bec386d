//! Interaction kernels `K`, confinement potentials `Φ` and alignment weights `ψ`.
//!
//! All catalog kernels are radial, `K(x) = k(|x|)`, so `K(x) = K(-x)` holds
//! exactly and `∇K(x) = k'(|x|) x / |x|`.

mod hypotheses;

use std::path::Path;

pub use hypotheses::{
    admissible_q_windows, check_hypotheses, local_integrability, theta_exponent, HypothesisOptions,
    HypothesisReport, LocalIntegrability, NormSample, QWindow, Verdict,
};

use crate::error::{invalid, Error, Result};
use crate::fields::Grid;
use crate::scalar::Real;

/// Anything that can be evaluated pointwise with its gradient.
pub trait Potential<T: Real> {
    fn value(&self, x: [T; 2]) -> Result<T>;
    fn gradient(&self, x: [T; 2]) -> Result<[T; 2]>;
}

pub fn eval_potential<T: Real, P: Potential<T> + ?Sized>(p: &P, points: &[[T; 2]]) -> Result<Vec<T>> {
    points.iter().map(|&x| p.value(x)).collect()
}

pub fn eval_gradient<T: Real, P: Potential<T> + ?Sized>(
    p: &P,
    points: &[[T; 2]],
) -> Result<Vec<[T; 2]>> {
    points.iter().map(|&x| p.gradient(x)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelKind<T> {
    Zero,
    /// `K = -A exp(-|x|²)`.
    GaussianAttractive,
    /// `K = A (1 - exp(-|x|²/2))`.
    GaussianKai,
    /// `K = A |x|^b / b`, `b > -2`, `b != 0`, capped by a quadratic inside `core_radius`.
    /// A zero `core_radius` leaves the singularity in place.
    PowerLaw { exponent: T, core_radius: T },
}

/// Interaction kernel with optional smooth far-field cutoff: the profile is
/// multiplied by a quintic step falling from 1 at `cutoff` to 0 at `2 * cutoff`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec<T> {
    pub kind: KernelKind<T>,
    pub amplitude: T,
    pub cutoff: Option<T>,
}

impl<T: Real> KernelSpec<T> {
    pub fn zero() -> Self {
        KernelSpec {
            kind: KernelKind::Zero,
            amplitude: T::zero(),
            cutoff: None,
        }
    }

    pub fn gaussian_attractive(amplitude: T) -> Self {
        KernelSpec {
            kind: KernelKind::GaussianAttractive,
            amplitude,
            cutoff: None,
        }
    }

    pub fn gaussian_kai(amplitude: T) -> Self {
        KernelSpec {
            kind: KernelKind::GaussianKai,
            amplitude,
            cutoff: None,
        }
    }

    /// Unmollified power law; call [`Self::mollified_for`] before sampling on a grid.
    pub fn power_law(exponent: T, amplitude: T) -> Result<Self> {
        let spec = KernelSpec {
            kind: KernelKind::PowerLaw {
                exponent,
                core_radius: T::zero(),
            },
            amplitude,
            cutoff: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_cutoff(mut self, cutoff: T) -> Self {
        self.cutoff = Some(cutoff);
        self
    }

    /// Caps a power law inside half a cell width of `grid`; other kinds are unchanged.
    pub fn mollified_for(mut self, grid: &Grid<T>) -> Self {
        if let KernelKind::PowerLaw { exponent, .. } = self.kind {
            let h = (0..grid.dim()).map(|a| grid.h(a)).fold(T::infinity(), T::min);
            self.kind = KernelKind::PowerLaw {
                exponent,
                core_radius: h * T::lit(0.5),
            };
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(invalid("kernel.amplitude", "must be finite"));
        }
        if let Some(c) = self.cutoff {
            if !(c > T::zero()) {
                return Err(invalid("kernel.cutoff", format!("cutoff {c} must be positive")));
            }
        }
        if let KernelKind::PowerLaw {
            exponent,
            core_radius,
        } = self.kind
        {
            if !(exponent > T::lit(-2.0)) || exponent == T::zero() {
                return Err(invalid(
                    "kernel.exponent",
                    format!("power-law exponent b = {exponent} must satisfy b > -2, b != 0"),
                ));
            }
            if core_radius < T::zero() {
                return Err(invalid("kernel.core_radius", "must be nonnegative"));
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, KernelKind::Zero) || self.amplitude == T::zero()
    }

    /// Bare radial profile `(k(r), k'(r))` before the far-field cutoff.
    fn bare_profile(&self, r: T) -> Result<(T, T)> {
        let a = self.amplitude;
        Ok(match self.kind {
            KernelKind::Zero => (T::zero(), T::zero()),
            KernelKind::GaussianAttractive => {
                let e = (-r * r).exp();
                (-a * e, T::lit(2.0) * a * r * e)
            }
            KernelKind::GaussianKai => {
                let e = (-r * r * T::lit(0.5)).exp();
                (a * (T::one() - e), a * r * e)
            }
            KernelKind::PowerLaw {
                exponent: b,
                core_radius: r0,
            } => {
                if r >= r0 && r > T::zero() {
                    (a * r.powf(b) / b, a * r.powf(b - T::one()))
                } else if r0 > T::zero() {
                    // quadratic cap matching value and slope at r0
                    let k0 = a * r0.powf(b) / b;
                    let d0 = a * r0.powf(b - T::one());
                    let beta = d0 / (T::lit(2.0) * r0);
                    let alpha = k0 - d0 * r0 * T::lit(0.5);
                    (alpha + beta * r * r, T::lit(2.0) * beta * r)
                } else {
                    return Err(Error::Singularity);
                }
            }
        })
    }

    /// Radial profile `(k(r), k'(r))` including the cutoff.
    pub fn profile(&self, r: T) -> Result<(T, T)> {
        let (k, dk) = self.bare_profile(r)?;
        Ok(match self.cutoff {
            None => (k, dk),
            Some(rc) => {
                let (chi, dchi) = smooth_step_down(r, rc);
                (k * chi, dk * chi + k * dchi)
            }
        })
    }

    /// Profile without mollification or cutoff; used for local integrability checks.
    pub fn singular_profile(&self, r: T) -> (T, T) {
        let mut bare = *self;
        bare.cutoff = None;
        if let KernelKind::PowerLaw { exponent, .. } = self.kind {
            bare.kind = KernelKind::PowerLaw {
                exponent,
                core_radius: T::zero(),
            };
            if r == T::zero() {
                return (T::infinity(), T::infinity());
            }
        }
        bare.bare_profile(r).unwrap_or((T::nan(), T::nan()))
    }
}

/// Quintic step: 1 on `[0, rc]`, 0 beyond `2 rc`, C² in between.
fn smooth_step_down<T: Real>(r: T, rc: T) -> (T, T) {
    if r <= rc {
        (T::one(), T::zero())
    } else if r >= rc + rc {
        (T::zero(), T::zero())
    } else {
        let s = (r - rc) / rc;
        let s2 = s * s;
        let s3 = s2 * s;
        let up = s3 * (T::lit(10.0) - T::lit(15.0) * s + T::lit(6.0) * s2);
        let dup = T::lit(30.0) * s2 * (T::one() - s) * (T::one() - s) / rc;
        (T::one() - up, -dup)
    }
}

fn radial_value<T: Real>(x: [T; 2]) -> T {
    (x[0] * x[0] + x[1] * x[1]).sqrt()
}

fn radial_gradient<T: Real>(x: [T; 2], r: T, dk: T) -> [T; 2] {
    if r == T::zero() {
        [T::zero(); 2]
    } else {
        [dk * x[0] / r, dk * x[1] / r]
    }
}

impl<T: Real> Potential<T> for KernelSpec<T> {
    fn value(&self, x: [T; 2]) -> Result<T> {
        Ok(self.profile(radial_value(x))?.0)
    }

    fn gradient(&self, x: [T; 2]) -> Result<[T; 2]> {
        let r = radial_value(x);
        let (_, dk) = self.profile(r)?;
        Ok(radial_gradient(x, r, dk))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConfinementKind<T> {
    Zero,
    /// `Φ = stiffness |x|² / 2`.
    Quadratic { stiffness: T },
    /// Radial table `(r_i, Φ_i)` with linear interpolation and linear extrapolation
    /// past the last radius. Gradients by centred differences.
    Tabulated { radii: Vec<T>, values: Vec<T> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfinementSpec<T> {
    pub kind: ConfinementKind<T>,
    /// Growth exponent `ν` used by the superlinear-growth and tail checks.
    pub growth_exponent: T,
}

impl<T: Real> ConfinementSpec<T> {
    pub fn zero() -> Self {
        ConfinementSpec {
            kind: ConfinementKind::Zero,
            growth_exponent: T::lit(0.5),
        }
    }

    pub fn quadratic(stiffness: T) -> Self {
        ConfinementSpec {
            kind: ConfinementKind::Quadratic { stiffness },
            growth_exponent: T::lit(0.5),
        }
    }

    pub fn tabulated(radii: Vec<T>, values: Vec<T>) -> Result<Self> {
        if radii.len() < 2 || radii.len() != values.len() {
            return Err(invalid(
                "confinement.table",
                "need at least two (radius, value) rows",
            ));
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) || radii[0] < T::zero() {
            return Err(invalid(
                "confinement.table",
                "radii must be nonnegative and strictly increasing",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("confinement.table", "values must be finite"));
        }
        Ok(ConfinementSpec {
            kind: ConfinementKind::Tabulated { radii, values },
            growth_exponent: T::lit(0.5),
        })
    }

    /// Two whitespace- or comma-separated columns `radius value`; `#` starts a comment.
    pub fn load_table(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut radii = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| invalid("confinement.table", format!("line {}: {e}", lineno + 1)))?;
            if cols.len() != 2 {
                return Err(invalid(
                    "confinement.table",
                    format!("line {} has {} columns, expected 2", lineno + 1, cols.len()),
                ));
            }
            radii.push(T::lit(cols[0]));
            values.push(T::lit(cols[1]));
        }
        Self::tabulated(radii, values)
    }

    pub fn with_growth_exponent(mut self, nu: T) -> Self {
        self.growth_exponent = nu;
        self
    }

    pub fn is_zero(&self) -> bool {
        match &self.kind {
            ConfinementKind::Zero => true,
            ConfinementKind::Quadratic { stiffness } => *stiffness == T::zero(),
            ConfinementKind::Tabulated { values, .. } => values.iter().all(|v| *v == T::zero()),
        }
    }

    fn table_value(radii: &[T], values: &[T], r: T) -> T {
        let n = radii.len();
        let seg = match radii.iter().position(|&ri| ri > r) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => n - 2,
        };
        let (r0, r1) = (radii[seg], radii[seg + 1]);
        let (v0, v1) = (values[seg], values[seg + 1]);
        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
    }
}

impl<T: Real> Potential<T> for ConfinementSpec<T> {
    fn value(&self, x: [T; 2]) -> Result<T> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        Ok(match &self.kind {
            ConfinementKind::Zero => T::zero(),
            ConfinementKind::Quadratic { stiffness } => *stiffness * r2 * T::lit(0.5),
            ConfinementKind::Tabulated { radii, values } => {
                Self::table_value(radii, values, r2.sqrt())
            }
        })
    }

    fn gradient(&self, x: [T; 2]) -> Result<[T; 2]> {
        Ok(match &self.kind {
            ConfinementKind::Zero => [T::zero(); 2],
            ConfinementKind::Quadratic { stiffness } => [*stiffness * x[0], *stiffness * x[1]],
            ConfinementKind::Tabulated { radii, values } => {
                let step = T::lit(1e-6) * (T::one() + radial_value(x));
                let mut g = [T::zero(); 2];
                for (axis, ga) in g.iter_mut().enumerate() {
                    let mut xp = x;
                    let mut xm = x;
                    xp[axis] = xp[axis] + step;
                    xm[axis] = xm[axis] - step;
                    let vp = Self::table_value(radii, values, radial_value(xp));
                    let vm = Self::table_value(radii, values, radial_value(xm));
                    *ga = (vp - vm) / (step + step);
                }
                g
            }
        })
    }
}

/// Nonnegative, bounded, symmetric alignment weight `ψ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlignmentKernel<T> {
    Zero,
    /// `ψ = strength · exp(-|x|² / length²)`.
    Gaussian { strength: T, length: T },
    Constant { strength: T },
}

impl<T: Real> AlignmentKernel<T> {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AlignmentKernel::Zero => Ok(()),
            AlignmentKernel::Gaussian { strength, length } => {
                if !(strength >= T::zero()) {
                    return Err(invalid("psi.strength", "alignment weight must be nonnegative"));
                }
                if !(length > T::zero()) {
                    return Err(invalid("psi.length", "must be positive"));
                }
                Ok(())
            }
            AlignmentKernel::Constant { strength } => {
                if !(strength >= T::zero()) {
                    return Err(invalid("psi.strength", "alignment weight must be nonnegative"));
                }
                Ok(())
            }
        }
    }

    pub fn eval(&self, x: [T; 2]) -> T {
        match *self {
            AlignmentKernel::Zero => T::zero(),
            AlignmentKernel::Gaussian { strength, length } => {
                strength * (-(x[0] * x[0] + x[1] * x[1]) / (length * length)).exp()
            }
            AlignmentKernel::Constant { strength } => strength,
        }
    }

    pub fn sup(&self) -> T {
        match *self {
            AlignmentKernel::Zero => T::zero(),
            AlignmentKernel::Gaussian { strength, .. } | AlignmentKernel::Constant { strength } => {
                strength
            }
        }
    }

    /// `inf ψ(x - y)` over pairs at distance at most `diameter`.
    pub fn lower_bound(&self, diameter: T) -> T {
        match *self {
            AlignmentKernel::Zero => T::zero(),
            AlignmentKernel::Gaussian { strength, length } => {
                strength * (-(diameter * diameter) / (length * length)).exp()
            }
            AlignmentKernel::Constant { strength } => strength,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn catalog_values() {
        let phi = ConfinementSpec::<f64>::quadratic(1.0);
        assert_eq!(phi.value([2.0, 0.0]).unwrap(), 2.0);
        assert_eq!(phi.gradient([2.0, 0.0]).unwrap(), [2.0, 0.0]);
        let kai = KernelSpec::<f64>::gaussian_kai(1.0);
        assert_eq!(kai.value([0.0, 0.0]).unwrap(), 0.0);
        let g = KernelSpec::<f64>::gaussian_attractive(1.0);
        let e = (-1f64).exp();
        assert_abs_diff_eq!(g.value([1.0, 0.0]).unwrap(), -e, epsilon = 1e-15);
        assert_abs_diff_eq!(g.gradient([1.0, 0.0]).unwrap()[0], 2.0 * e, epsilon = 1e-15);
    }

    #[test]
    fn power_law_singularity_and_cap() {
        let k = KernelSpec::<f64>::power_law(-0.5, 1.0).unwrap();
        assert!(matches!(k.value([0.0, 0.0]), Err(Error::Singularity)));
        let grid = Grid::<f64>::line(64, 4.0).unwrap();
        let m = k.mollified_for(&grid);
        let r0 = grid.h(0) / 2.0;
        let inside = m.value([0.0, 0.0]).unwrap();
        assert!(inside.is_finite());
        // value and slope continuous across the cap radius
        let (k_out, d_out) = m.profile(r0 * (1.0 + 1e-9)).unwrap();
        let (k_in, d_in) = m.profile(r0 * (1.0 - 1e-9)).unwrap();
        assert_abs_diff_eq!(k_out, k_in, epsilon = 1e-6);
        assert_abs_diff_eq!(d_out, d_in, epsilon = 1e-4);
        assert!(KernelSpec::<f64>::power_law(-2.0, 1.0).is_err());
    }

    #[test]
    fn cutoff_is_smooth_and_compact() {
        let k = KernelSpec::<f64>::gaussian_kai(1.0).with_cutoff(3.0);
        assert_eq!(k.value([6.5, 0.0]).unwrap(), 0.0);
        assert_eq!(k.value([2.0, 0.0]).unwrap(), KernelSpec::gaussian_kai(1.0).value([2.0, 0.0]).unwrap());
        let (a, _) = k.profile(6.0 - 1e-9).unwrap();
        assert!(a.abs() < 1e-12);
    }

    #[test]
    fn tabulated_matches_quadratic_samples() {
        let radii: Vec<f64> = (0..=400).map(|i| i as f64 * 0.025).collect();
        let values: Vec<f64> = radii.iter().map(|r| 0.5 * r * r).collect();
        let tab = ConfinementSpec::tabulated(radii, values).unwrap();
        assert_abs_diff_eq!(tab.value([1.3, 0.0]).unwrap(), 0.845, epsilon = 1e-3);
        assert_abs_diff_eq!(tab.gradient([1.3, 0.0]).unwrap()[0], 1.3, epsilon = 2e-2);
    }

    #[test]
    fn table_loader_parses_two_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("phi.txt");
        std::fs::write(&path, "# r phi\n0 0\n1, 0.5\n2 2\n").unwrap();
        let phi = ConfinementSpec::<f64>::load_table(&path).unwrap();
        assert_abs_diff_eq!(phi.value([1.5, 0.0]).unwrap(), 1.25, epsilon = 1e-12);
        std::fs::write(&path, "0 0 1\n").unwrap();
        assert!(ConfinementSpec::<f64>::load_table(&path).is_err());
    }

    #[test]
    fn negative_alignment_weight_is_rejected() {
        let psi = AlignmentKernel::Gaussian {
            strength: -1.0f64,
            length: 1.0,
        };
        assert!(psi.validate().is_err());
    }
}
