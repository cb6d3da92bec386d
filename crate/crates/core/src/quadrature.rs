//! Gauss–Legendre rules on `[a, b]`.

use crate::scalar::Real;

// 8-point nodes/weights on [-1, 1].
const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Single 8-point panel; exact for polynomials of degree 15.
pub fn gauss_legendre<T: Real>(a: T, b: T, f: impl Fn(T) -> T) -> T {
    let mid = (a + b) * T::lit(0.5);
    let half = (b - a) * T::lit(0.5);
    GL8.iter()
        .map(|&(x, w)| T::lit(w) * f(mid + half * T::lit(x)))
        .sum::<T>()
        * half
}

/// Composite rule with `panels` equal panels.
pub fn composite<T: Real>(a: T, b: T, panels: usize, f: impl Fn(T) -> T) -> T {
    let panels = panels.max(1);
    let w = (b - a) / T::from_usize_lossy(panels);
    (0..panels)
        .map(|k| {
            let lo = a + w * T::from_usize_lossy(k);
            gauss_legendre(lo, lo + w, &f)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_and_gaussians() {
        let p = gauss_legendre(0.0f64, 2.0, |x| x.powi(7) - 3.0 * x * x);
        assert!((p - (2f64.powi(8) / 8.0 - 8.0)).abs() < 1e-12);
        let g = composite(-10.0f64, 10.0, 40, |x| (-x * x).exp());
        assert!((g - std::f64::consts::PI.sqrt()).abs() < 1e-13);
    }
}
