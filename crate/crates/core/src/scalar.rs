use nalgebra::RealField;
use num_traits::{FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar underlying all dense linear algebra in this
/// crate. Implemented for `f32` and `f64`.
///
/// `NumAssign` is required on top of `RealField` so that
/// `num_complex::Complex<T>` gets its full arithmetic.
pub trait Real:
    RealField + FromPrimitive + ToPrimitive + NumAssign + Copy + Default + Send + Sync
{
}

impl<T> Real for T where
    T: RealField + FromPrimitive + ToPrimitive + NumAssign + Copy + Default + Send + Sync
{
}

/// Converts a finite `f64` constant (tolerance, coupling, angle, …)
/// into the working scalar type.
#[inline]
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 constant")
}
