//! Scalar abstraction shared by all numeric modules.

use nalgebra::{Complex, RealField};

/// Real floating-point scalar the library is generic over.
///
/// Blanket-implemented for every nalgebra [`RealField`] that is `Copy` and
/// thread-safe, which in practice means `f32` and `f64`.
pub trait Real: RealField + Copy + Send + Sync + num_traits::FromPrimitive {
    /// Converts an `f64` literal into this scalar.
    #[inline]
    fn lit(x: f64) -> Self {
        nalgebra::convert(x)
    }

    /// Lossy conversion to `f64` for reporting and serialization.
    #[inline]
    fn to_f64(self) -> f64 {
        self.to_subset().unwrap_or(f64::NAN)
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize fits in float")
    }
}

impl<T> Real for T where T: RealField + Copy + Send + Sync + num_traits::FromPrimitive {}

#[inline]
pub(crate) fn cr<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `e^{iθ}`
#[inline]
pub(crate) fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

#[inline]
pub(crate) fn imag_unit<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::one())
}

/// Neumaier-compensated sum; order of accumulation is the slice order.
pub(crate) fn compensated_sum<T: Real>(values: impl IntoIterator<Item = T>) -> T {
    let mut sum = T::zero();
    let mut c = T::zero();
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}
