//! Scalar abstractions.
//!
//! Everything that touches grids, convolutions or time stepping is generic over
//! [`Real`], which is implemented for `f32` and `f64`. The closed-form exponent
//! formulas only need field arithmetic and an order, captured by [`Exact`], so
//! they also run on rationals.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar used by the numerical core.
pub trait Real:
    Exact
    + Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Sum
    + Display
    + Debug
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target cannot represent finite `f64`s,
    /// which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Positive part.
    #[inline]
    fn pos(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Ordered field arithmetic, enough for the hypothesis exponent formulas.
pub trait Exact: Num + Clone + PartialOrd + Debug {
    fn from_ratio(num: i64, den: i64) -> Self;
}

impl Exact for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f32 / den as f32
    }
}

impl Exact for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Exact for num_rational::Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        num_rational::Ratio::new(num, den)
    }
}

pub(crate) fn min_of<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

pub(crate) fn max_of<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}
