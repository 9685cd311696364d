use core::fmt::{Debug, Display};
use core::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type used throughout the crate.
///
/// Production runs use `f32`; `f64` instantiations serve as high-precision
/// shadows for gradient checks and reference data.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` constant into `T`.
#[inline]
pub fn cast<T: Real>(x: f64) -> T {
    T::from_f64(x).unwrap_or_else(T::nan)
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Element-wise conversion between precisions.
pub fn convert<A: Real, B: Real>(xs: &[A]) -> alloc::vec::Vec<B> {
    xs.iter().map(|&x| cast(to_f64(x))).collect()
}
