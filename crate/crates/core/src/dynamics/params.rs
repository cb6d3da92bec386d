use crate::error::{invalid, Result};
use crate::potentials::{AlignmentKernel, ConfinementSpec, KernelSpec};
use crate::scalar::{max_of, Real};

/// Velocity damping on the right-hand side of the momentum equation.
#[derive(Clone, Debug, PartialEq)]
pub enum Damping<T> {
    /// `-rho u`.
    Linear,
    /// Nonlocal velocity alignment `rho (psi * m) - m (psi * rho)`.
    Alignment(AlignmentKernel<T>),
    None,
}

/// Physical and regularisation constants of the damped Navier-Stokes system.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    pub mu: T,
    pub lambda: T,
    pub a: T,
    pub m: T,
    /// Artificial density diffusion `eps Δrho`.
    pub eps: T,
    /// Artificial pressure `delta rho^beta`.
    pub delta: T,
    pub beta: T,
    pub damping: Damping<T>,
    pub kernel: KernelSpec<T>,
    pub confinement: ConfinementSpec<T>,
}

impl<T: Real> ModelParams<T> {
    /// `mu = 1, lambda = 0, a = 1, m = 2`, linear damping, no forces.
    pub fn standard() -> Self {
        ModelParams {
            mu: T::one(),
            lambda: T::zero(),
            a: T::one(),
            m: T::lit(2.0),
            eps: T::zero(),
            delta: T::zero(),
            beta: T::lit(5.0),
            damping: Damping::Linear,
            kernel: KernelSpec::zero(),
            confinement: ConfinementSpec::zero(),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let finite = [
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("a", self.a),
            ("m", self.m),
            ("eps", self.eps),
            ("delta", self.delta),
            ("beta", self.beta),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, format!("{v} is not finite")));
            }
        }
        if !(self.mu > T::zero()) {
            return Err(invalid("mu", format!("mu = {} must be > 0", self.mu)));
        }
        let d = T::from_usize_lossy(dim);
        if self.lambda + T::lit(2.0) / d * self.mu < T::zero() {
            return Err(invalid(
                "lambda",
                format!("lambda + (2/{dim}) mu = {} must be >= 0", self.lambda + T::lit(2.0) / d * self.mu),
            ));
        }
        if !(self.a > T::zero()) {
            return Err(invalid("a", format!("a = {} must be > 0", self.a)));
        }
        if !(self.m > T::lit(1.5)) {
            return Err(invalid("m", format!("m = {} must exceed 3/2", self.m)));
        }
        if self.eps < T::zero() {
            return Err(invalid("eps", format!("eps = {} must be >= 0", self.eps)));
        }
        if self.delta < T::zero() {
            return Err(invalid("delta", format!("delta = {} must be >= 0", self.delta)));
        }
        if self.delta > T::zero() && !(self.beta > max_of(T::lit(4.0), self.m)) {
            return Err(invalid(
                "beta",
                format!("beta = {} must exceed max(4, m) when delta > 0", self.beta),
            ));
        }
        if let Damping::Alignment(psi) = &self.damping {
            psi.validate()?;
        }
        self.kernel.validate()
    }

    /// `a rho^m + delta rho^beta`.
    pub fn pressure(&self, rho: T) -> T {
        if rho <= T::zero() {
            return T::zero();
        }
        let mut p = self.a * rho.powf(self.m);
        if self.delta > T::zero() {
            p = p + self.delta * rho.powf(self.beta);
        }
        p
    }

    /// Squared sound speed `a m rho^{m-1} + delta beta rho^{beta-1}`.
    pub fn sound_speed_sq(&self, rho: T) -> T {
        if rho <= T::zero() {
            return T::zero();
        }
        let mut c2 = self.a * self.m * rho.powf(self.m - T::one());
        if self.delta > T::zero() {
            c2 = c2 + self.delta * self.beta * rho.powf(self.beta - T::one());
        }
        c2
    }

    pub(crate) fn linear_damping_rate(&self) -> T {
        match self.damping {
            Damping::Linear => T::one(),
            _ => T::zero(),
        }
    }

    pub(crate) fn alignment(&self) -> Option<&AlignmentKernel<T>> {
        match &self.damping {
            Damping::Alignment(psi) => Some(psi),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constraints() {
        let p = ModelParams::<f64>::standard();
        assert!(p.validate(1).is_ok());
        assert!(ModelParams { mu: 0.0, ..p.clone() }.validate(1).is_err());
        assert!(ModelParams { m: 1.5, ..p.clone() }.validate(1).is_err());
        assert!(ModelParams { a: -1.0, ..p.clone() }.validate(1).is_err());
        // lambda + (2/d) mu >= 0 depends on dimension.
        let q = ModelParams { lambda: -1.5, ..p.clone() };
        assert!(q.validate(1).is_ok());
        assert!(q.validate(2).is_err());
        let r = ModelParams { delta: 0.1, beta: 4.0, ..p.clone() };
        assert!(r.validate(1).is_err());
        let r = ModelParams { delta: 0.1, beta: 4.5, ..p };
        assert!(r.validate(1).is_ok());
    }

    #[test]
    fn sound_speed_matches_pressure_derivative() {
        let p = ModelParams { delta: 0.01, beta: 5.0, ..ModelParams::<f64>::standard() };
        let r = 0.7;
        let fd = (p.pressure(r + 1e-6) - p.pressure(r - 1e-6)) / 2e-6;
        assert!((fd - p.sound_speed_sq(r)).abs() < 1e-8);
    }
}
