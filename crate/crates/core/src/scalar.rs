use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar used throughout the geometry, cost, bound and optimizer code.
///
/// Implemented for `f32` and `f64`. Experiments and the CLI run in `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Lossy conversion back to `f64` for reporting.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Wraps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle<T: Scalar>(theta: T) -> T {
    let tau = T::TAU();
    let w = theta % tau;
    let w = if w < T::zero() { w + tau } else { w };
    // `w + tau` can round up to exactly tau for tiny negative inputs.
    if w >= tau {
        T::zero()
    } else {
        w
    }
}
