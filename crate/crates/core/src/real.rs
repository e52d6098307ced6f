//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All densities, quadrature rules and estimators are written against
//! [`Real`], so the same code runs in `f32`, `f64` and (with the `quad`
//! feature) IEEE binary128 via `f128`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point scalar usable throughout the crate.
pub trait Real: Float + FloatConst + FromPrimitive + Debug + Display + Sum + Send + Sync + 'static {
    /// Lossy conversion from an `f64` constant.
    #[inline]
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Conversion from a count or index.
    #[inline]
    fn n(x: usize) -> Self {
        Self::from_usize(x).expect("representable integer")
    }

    /// Conversion to `f64` for reporting.
    #[inline]
    fn f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(feature = "quad")]
impl Real for f128::f128 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_convert() {
        assert_eq!(<f64 as Real>::c(0.25), 0.25);
        assert_eq!(<f32 as Real>::n(7), 7.0f32);
        assert_eq!(Real::f64(1.5f32), 1.5);
    }

    #[cfg(feature = "quad")]
    #[test]
    fn quad_carries_more_bits_than_f64() {
        use f128::f128;
        let third = f128::c(1.0) / f128::c(3.0);
        let resid = third - f128::c(third.f64());
        assert!(resid.abs() > f128::c(1e-18));
        assert!(resid.abs() < f128::c(1e-16));
    }
}
