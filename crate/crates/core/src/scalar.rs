//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::{Complex, ComplexField, RealField};
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
///
/// Everything numeric in this crate is written against this trait. The
/// nalgebra `RealField` supertrait supplies the transcendental functions,
/// `num_traits` supplies lossless-enough conversion from literals.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Default + Send + Sync + std::fmt::Display
{
    /// Converts an `f64` literal into `Self`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon for the concrete type.
    fn epsilon() -> Self;
}

impl Real for f32 {
    fn epsilon() -> Self {
        f32::EPSILON
    }
}

impl Real for f64 {
    fn epsilon() -> Self {
        f64::EPSILON
    }
}

#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::lit(x)
}

/// Returns `n` log-spaced points from `lo` to `hi` inclusive.
pub fn logspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / T::from_usize(n - 1).unwrap();
            (0..n)
                .map(|i| (a + step * T::from_usize(i).unwrap()).exp())
                .collect()
        }
    }
}

/// Modulus of a complex number.
#[inline]
pub fn cabs<T: Real>(c: Complex<T>) -> T {
    ComplexField::modulus(c)
}

/// Argument of a complex number, radians.
#[inline]
pub fn carg<T: Real>(c: Complex<T>) -> T {
    ComplexField::argument(c)
}

/// Magnitude in decibels.
#[inline]
pub fn db<T: Real>(x: T) -> T {
    lit::<T>(20.0) * x.log10()
}
