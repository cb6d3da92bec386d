//! Exponent formulas and numerical checks of the growth/integrability assumptions
//! on `Φ` and `K`.

use crate::error::{invalid, Result};
use crate::fields::Grid;
use crate::quadrature::{composite, gauss_legendre};
use crate::scalar::{max_of, min_of, Exact, Real};

use super::{ConfinementKind, ConfinementSpec, KernelKind, KernelSpec, Potential};

fn check_m<E: Exact>(m: &E) -> Result<()> {
    if *m > E::from_ratio(3, 2) {
        Ok(())
    } else {
        Err(invalid(
            "m",
            format!("pressure exponent m = {m:?} must exceed 3/2"),
        ))
    }
}

/// `θ = min(2m/3 - 1, 1/4)` for `m > 3/2`.
pub fn theta_exponent<E: Exact>(m: E) -> Result<E> {
    check_m(&m)?;
    let two_thirds_m = E::from_ratio(2, 3) * m;
    Ok(min_of(two_thirds_m - E::one(), E::from_ratio(1, 4)))
}

/// Open interval `(lower, upper)`; `upper == None` means unbounded.
#[derive(Clone, Debug, PartialEq)]
pub struct QWindow<E> {
    pub lower: E,
    pub upper: Option<E>,
}

impl<E: Exact> QWindow<E> {
    pub fn contains(&self, q: &E) -> bool {
        *q > self.lower && self.upper.as_ref().is_none_or(|u| q < u)
    }

    pub fn is_empty(&self) -> bool {
        self.upper.as_ref().is_some_and(|u| *u <= self.lower)
    }
}

/// Admissible Lebesgue exponents for `K` and for `∇K`:
/// `q > max(1/(m-1), 1)` and `q > max(m/(2(m-1)+θ), 1)`.
pub fn admissible_q_windows<E: Exact>(m: E) -> Result<(QWindow<E>, QWindow<E>)> {
    let theta = theta_exponent(m.clone())?;
    let m1 = m.clone() - E::one();
    let k_lower = max_of(E::one() / m1.clone(), E::one());
    let two = E::one() + E::one();
    let g_lower = max_of(m / (two * m1 + theta), E::one());
    Ok((
        QWindow {
            lower: k_lower,
            upper: None,
        },
        QWindow {
            lower: g_lower,
            upper: None,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The truncated box cannot decide (tail not controlled analytically).
    Indeterminate,
}

impl Verdict {
    fn and(self, other: Verdict) -> Verdict {
        match (self, other) {
            (Verdict::Fails, _) | (_, Verdict::Fails) => Verdict::Fails,
            (Verdict::Indeterminate, _) | (_, Verdict::Indeterminate) => Verdict::Indeterminate,
            _ => Verdict::Holds,
        }
    }
}

/// Norms of `K` and `∇K` at one sampled exponent. `None` when the norm is
/// infinite or the tail is not controlled.
#[derive(Clone, Debug, PartialEq)]
pub struct NormSample<T> {
    pub q: T,
    pub kernel_norm: Option<T>,
    pub kernel_verdict: Verdict,
    pub gradient_norm: Option<T>,
    pub gradient_verdict: Verdict,
}

/// Shell-by-shell integrability test near the origin of the unmollified kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalIntegrability<T> {
    pub q: T,
    /// Ratio of `∫|f|^q` over consecutive dyadic shells approaching 0.
    pub shell_ratio: T,
    pub numeric: Verdict,
    pub analytic: Verdict,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisOptions<T> {
    /// `R_o` as a fraction of the box half width.
    pub outer_radius_fraction: T,
    /// Quadrature panels per grid cell.
    pub refinement: usize,
    /// Offsets above the lower window endpoint at which norms are sampled.
    pub q_offsets: Vec<T>,
}

impl<T: Real> Default for HypothesisOptions<T> {
    fn default() -> Self {
        HypothesisOptions {
            outer_radius_fraction: T::lit(0.25),
            refinement: 4,
            q_offsets: vec![T::lit(0.05), T::one(), T::lit(3.0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisReport<T> {
    pub theta: T,
    pub q_window_kernel: QWindow<T>,
    pub q_window_gradient: QWindow<T>,
    pub samples: Vec<NormSample<T>>,
    pub kernel_in_lq: Verdict,
    pub gradient_in_lq: Verdict,
    /// Power-law kernels only: local integrability of `|∇K|^q` at the smallest sampled q.
    pub local_gradient: Option<LocalIntegrability<T>>,
    /// `R_o` used for the ratio.
    pub outer_radius: T,
    /// `max |∇Φ| / Φ` over sampled `|x| > R_o`; `None` if `Φ` vanishes there.
    pub hc_ratio_max: Option<T>,
    pub hc_growth_ok: Verdict,
}

impl<T: Real> HypothesisReport<T> {
    pub fn windows_nonempty(&self) -> bool {
        !self.q_window_kernel.is_empty() && !self.q_window_gradient.is_empty()
    }
}

/// Radial measure factor: `∫_{R^d} f(|x|) dx = c_d ∫ f(r) r^{d-1} dr`.
fn shell_factor<T: Real>(dim: usize) -> T {
    if dim == 1 {
        T::lit(2.0)
    } else {
        T::lit(2.0) * T::PI()
    }
}

/// Upper bound of `∫_L^∞ r^p e^{-c r²} dr` via `f(r) <= f(L) e^{-κ (r-L)}`.
fn gaussian_tail<T: Real>(p: T, c: T, l: T) -> Option<T> {
    let kappa = T::lit(2.0) * c * l - p / l;
    (kappa > T::zero()).then(|| l.powf(p) * (-c * l * l).exp() / kappa)
}

/// Bound on `∫_{|x|>L} |f|^q dx` for `f = K` (`gradient == false`) or `∇K`.
/// `Err(Verdict)` when the tail is infinite (`Fails`) or unknown (`Indeterminate`).
fn tail_bound<T: Real>(
    k: &KernelSpec<T>,
    q: T,
    l: T,
    dim: usize,
    gradient: bool,
) -> std::result::Result<T, Verdict> {
    if let Some(rc) = k.cutoff {
        if rc + rc <= l {
            return Ok(T::zero());
        }
        if gradient {
            return Err(Verdict::Indeterminate);
        }
    }
    let d = T::from_usize_lossy(dim);
    let a = k.amplitude.abs();
    let factor = shell_factor::<T>(dim);
    match k.kind {
        KernelKind::Zero => Ok(T::zero()),
        KernelKind::GaussianAttractive => {
            let (coef, p) = if gradient {
                (T::lit(2.0) * a, q + d - T::one())
            } else {
                (a, d - T::one())
            };
            gaussian_tail(p, q, l)
                .map(|t| factor * coef.powf(q) * t)
                .ok_or(Verdict::Indeterminate)
        }
        KernelKind::GaussianKai => {
            if gradient {
                gaussian_tail(q + d - T::one(), q * T::lit(0.5), l)
                    .map(|t| factor * a.powf(q) * t)
                    .ok_or(Verdict::Indeterminate)
            } else if k.cutoff.is_some() {
                Err(Verdict::Indeterminate)
            } else {
                // K tends to the nonzero constant A at infinity.
                Err(Verdict::Fails)
            }
        }
        KernelKind::PowerLaw { exponent: b, .. } => {
            let power = if gradient { (b - T::one()) * q } else { b * q };
            let e = power + d;
            if e < T::zero() {
                let coef = if gradient { a } else { a / b.abs() };
                Ok(factor * coef.powf(q) * l.powf(e) / (-e))
            } else if k.cutoff.is_some() {
                Err(Verdict::Indeterminate)
            } else {
                Err(Verdict::Fails)
            }
        }
    }
}

fn lq_norm<T: Real>(
    k: &KernelSpec<T>,
    q: T,
    l: T,
    dim: usize,
    panels: usize,
    gradient: bool,
) -> (Option<T>, Verdict) {
    let factor = shell_factor::<T>(dim);
    let d1 = (dim - 1) as i32;
    let inner = composite(T::zero(), l, panels, |r| {
        let (v, dv) = k.profile(r).unwrap_or((T::nan(), T::nan()));
        let f = if gradient { dv.abs() } else { v.abs() };
        f.powf(q) * r.powi(d1)
    }) * factor;
    if !inner.is_finite() {
        return (None, Verdict::Fails);
    }
    match tail_bound(k, q, l, dim, gradient) {
        Ok(t) => (Some((inner + t).powf(q.recip())), Verdict::Holds),
        Err(v) => (None, v),
    }
}

/// Dyadic-shell test of `∫_{|x|<1} |f|^q dx < ∞` for the unmollified kernel
/// (`gradient` selects `∇K`). The analytic verdict for a power law
/// `|f| ~ r^s` is `q·s + d > 0`.
pub fn local_integrability<T: Real>(
    k: &KernelSpec<T>,
    q: T,
    dim: usize,
    gradient: bool,
) -> LocalIntegrability<T> {
    let d1 = (dim - 1) as i32;
    let shell = |r: T| {
        gauss_legendre(r * T::lit(0.5), r, |s| {
            let (v, dv) = k.singular_profile(s);
            let f = if gradient { dv.abs() } else { v.abs() };
            f.powf(q) * s.powi(d1)
        })
    };
    let mut r = T::lit(2f64.powi(-20));
    let mut prev = shell(r);
    let mut ratio = T::zero();
    for _ in 0..10 {
        r = r * T::lit(0.5);
        let next = shell(r);
        ratio = if prev > T::zero() { next / prev } else { T::zero() };
        prev = next;
    }
    let numeric = if !ratio.is_finite() {
        Verdict::Fails
    } else if ratio < T::one() - T::lit(1e-6) {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    let analytic = match k.kind {
        KernelKind::PowerLaw { exponent: b, .. } => {
            let s = if gradient { b - T::one() } else { b };
            if q * s + T::from_usize_lossy(dim) > T::zero() {
                Verdict::Holds
            } else {
                Verdict::Fails
            }
        }
        _ => Verdict::Holds,
    };
    LocalIntegrability {
        q,
        shell_ratio: ratio,
        numeric,
        analytic,
    }
}

fn confinement_checks<T: Real>(
    phi: &ConfinementSpec<T>,
    r_o: T,
    l: T,
    samples: usize,
) -> (Option<T>, Verdict) {
    if matches!(phi.kind, ConfinementKind::Zero) || phi.is_zero() {
        return (None, Verdict::Fails);
    }
    let nu = phi.growth_exponent;
    let radius = |k: usize| r_o + (l - r_o) * T::from_usize_lossy(k) / T::from_usize_lossy(samples);
    let mut ratio_max = T::zero();
    for k in 1..=samples {
        let r = radius(k);
        let v = phi.value([r, T::zero()]).unwrap_or(T::nan());
        let g = phi.gradient([r, T::zero()]).unwrap_or([T::nan(); 2]);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if !(v > T::zero()) {
            return (None, Verdict::Fails);
        }
        ratio_max = ratio_max.max(gn / v);
    }
    // Φ(x)/|x|^{1+ν} must be increasing over the outermost samples.
    let tail_start = samples / 2;
    let growth = |r: T| phi.value([r, T::zero()]).unwrap_or(T::nan()) / r.powf(T::one() + nu);
    let increasing = (tail_start..samples).all(|k| growth(radius(k + 1)) > growth(radius(k)));
    (
        Some(ratio_max),
        if increasing {
            Verdict::Holds
        } else {
            Verdict::Fails
        },
    )
}

/// Numerical check of the confinement and interaction hypotheses on `grid`'s box.
pub fn check_hypotheses<T: Real>(
    kernel: &KernelSpec<T>,
    confinement: &ConfinementSpec<T>,
    m: T,
    grid: &Grid<T>,
    options: &HypothesisOptions<T>,
) -> Result<HypothesisReport<T>> {
    kernel.validate()?;
    let theta = theta_exponent(m)?;
    let (wk, wg) = admissible_q_windows(m)?;
    let dim = grid.dim();
    let l = (0..dim).map(|a| grid.half_width(a)).fold(T::infinity(), T::min);
    let h = (0..dim).map(|a| grid.h(a)).fold(T::infinity(), T::min);
    let panels = ((l / h).ceil().to_f64_lossy() as usize).max(8) * options.refinement.max(1);

    let mut samples = Vec::new();
    let mut kernel_in_lq = Verdict::Holds;
    let mut gradient_in_lq = Verdict::Holds;
    for off in &options.q_offsets {
        let qk = wk.lower + *off;
        let qg = wg.lower + *off;
        let (kn, kv) = lq_norm(kernel, qk, l, dim, panels, false);
        let (gn, gv) = lq_norm(kernel, qg, l, dim, panels, true);
        kernel_in_lq = kernel_in_lq.and(kv);
        gradient_in_lq = gradient_in_lq.and(gv);
        samples.push(NormSample {
            q: qk,
            kernel_norm: kn,
            kernel_verdict: kv,
            gradient_norm: gn,
            gradient_verdict: gv,
        });
    }
    let local_gradient = match kernel.kind {
        KernelKind::PowerLaw { .. } => {
            let q = wg.lower + options.q_offsets.first().copied().unwrap_or(T::lit(0.05));
            Some(local_integrability(kernel, q, dim, true))
        }
        _ => None,
    };
    let outer_radius = options.outer_radius_fraction * l;
    let (hc_ratio_max, hc_growth_ok) = confinement_checks(confinement, outer_radius, l, 64);
    Ok(HypothesisReport {
        theta,
        q_window_kernel: wk,
        q_window_gradient: wg,
        samples,
        kernel_in_lq,
        gradient_in_lq,
        local_gradient,
        outer_radius,
        hc_ratio_max,
        hc_growth_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    type Q = Ratio<i64>;

    #[test]
    fn theta_examples_exact() {
        assert_eq!(theta_exponent(Q::from_integer(2)).unwrap(), Q::new(1, 4));
        assert_eq!(theta_exponent(Q::new(9, 5)).unwrap(), Q::new(1, 5));
        assert!(theta_exponent(Q::new(3, 2)).is_err());
        assert!(theta_exponent(1.4f64).is_err());
    }

    #[test]
    fn windows_exact() {
        let (k, g) = admissible_q_windows(Q::from_integer(2)).unwrap();
        assert_eq!(k.lower, Q::from_integer(1));
        assert_eq!(g.lower, Q::from_integer(1));
        let (k, _) = admissible_q_windows(Q::new(8, 5)).unwrap();
        assert_eq!(k.lower, Q::new(5, 3));
        assert!(k.contains(&Q::from_integer(2)) && !k.contains(&Q::new(5, 3)));
    }

    #[test]
    fn gradient_window_tends_to_three_halves() {
        let (_, g) = admissible_q_windows(1.501f64).unwrap();
        assert!((g.lower - 1.5).abs() < 1e-2);
    }

    #[test]
    fn gaussian_kernel_and_quadratic_confinement_pass() {
        let grid = Grid::<f64>::line(128, 6.0).unwrap();
        let r = check_hypotheses(
            &KernelSpec::gaussian_attractive(1.0),
            &ConfinementSpec::quadratic(1.0),
            2.0,
            &grid,
            &HypothesisOptions::default(),
        )
        .unwrap();
        assert_eq!(r.theta, 0.25);
        assert!(r.windows_nonempty());
        assert_eq!(r.kernel_in_lq, Verdict::Holds);
        assert_eq!(r.gradient_in_lq, Verdict::Holds);
        assert_eq!(r.hc_growth_ok, Verdict::Holds);
        // |∇Φ|/Φ = 2/|x| is largest at R_o = 1.5
        assert!((r.hc_ratio_max.unwrap() - 2.0 / 1.5).abs() < 0.1);
        // L^q norm of exp(-x²) in 1D: (sqrt(pi/q))^{1/q}
        let s = &r.samples[1];
        let exact = (std::f64::consts::PI / s.q).sqrt().powf(1.0 / s.q);
        assert!((s.kernel_norm.unwrap() - exact).abs() < 1e-8);
    }

    #[test]
    fn kai_kernel_is_not_in_lq_without_cutoff() {
        let grid = Grid::<f64>::line(64, 6.0).unwrap();
        let opts = HypothesisOptions::default();
        let r = check_hypotheses(
            &KernelSpec::gaussian_kai(1.0),
            &ConfinementSpec::zero(),
            2.5,
            &grid,
            &opts,
        )
        .unwrap();
        assert_eq!(r.kernel_in_lq, Verdict::Fails);
        assert_eq!(r.gradient_in_lq, Verdict::Holds);
        assert_eq!(r.hc_growth_ok, Verdict::Fails);
        let cut = check_hypotheses(
            &KernelSpec::gaussian_kai(1.0).with_cutoff(2.5),
            &ConfinementSpec::zero(),
            2.5,
            &grid,
            &opts,
        )
        .unwrap();
        assert_eq!(cut.kernel_in_lq, Verdict::Holds);
    }

    #[test]
    fn wide_cutoff_is_indeterminate() {
        let grid = Grid::<f64>::line(64, 2.0).unwrap();
        let r = check_hypotheses(
            &KernelSpec::gaussian_kai(1.0).with_cutoff(5.0),
            &ConfinementSpec::zero(),
            2.0,
            &grid,
            &HypothesisOptions::default(),
        )
        .unwrap();
        assert_eq!(r.kernel_in_lq, Verdict::Indeterminate);
    }

    #[test]
    fn power_law_local_integrability_matches_criterion() {
        let k = KernelSpec::<f64>::power_law(-1.0, 1.0).unwrap();
        let c = local_integrability(&k, 1.1, 1, true);
        assert_eq!(c.analytic, Verdict::Fails);
        assert_eq!(c.numeric, c.analytic);
        for (b, q, dim) in [(-0.5, 1.2, 2), (-0.5, 1.5, 1), (0.5, 1.5, 1), (-1.5, 1.1, 2), (0.5, 3.0, 1)] {
            let k = KernelSpec::<f64>::power_law(b, 1.0).unwrap();
            for grad in [false, true] {
                let c = local_integrability(&k, q, dim, grad);
                assert_eq!(c.numeric, c.analytic, "b={b} q={q} d={dim} grad={grad}");
            }
        }
    }
}
