//! Scalar abstractions.
//!
//! Exact algebra (Riesz functional, shifts, moment matrices, certificate
//! expansion) only needs ring operations and works for rationals as well as
//! floats. Everything spectral or asymptotic needs a [`Scalar`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use std::ops::Neg;

use num_traits::{Float, FromPrimitive, Num, ToPrimitive};

/// Ordered ring with negation: `f32`, `f64`, `Ratio<i64>`, `BigRational`, ...
pub trait Ring: Num + Neg<Output = Self> + Clone + PartialOrd + Debug {}

impl<T> Ring for T where T: Num + Neg<Output = T> + Clone + PartialOrd + Debug {}

/// Floating point scalar used by the numerical layers.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Sum + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in scalar type")
}

/// Converts a count into `T`.
#[inline]
pub fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("count representable in scalar type")
}

/// `ln(n!)` by direct summation of `ln k`.
pub fn ln_factorial<T: Scalar>(n: usize) -> T {
    let mut acc = 0.0_f64;
    for k in 2..=n {
        acc += (k as f64).ln();
    }
    lit(acc)
}

/// `ln(exp(a) + exp(b))` without overflow.
pub fn log_add_exp<T: Scalar>(a: T, b: T) -> T {
    if a == T::neg_infinity() {
        return b;
    }
    if b == T::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}
