//! Scalar abstraction for thermometer-valued quantities.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type used for affect values and population metrics.
///
/// Implemented for `f32` and `f64`. Thermometer arithmetic only ever adds
/// small multiples of the asymmetry constant, so both widths are exact for
/// integer-valued parameters.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any float width")
    }

    fn from_usize_lossy(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to any float width")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Thermometer extremes.
pub(crate) fn hundred<T: Scalar>() -> T {
    T::from_f64_lossy(100.0)
}

pub(crate) fn fifty<T: Scalar>() -> T {
    T::from_f64_lossy(50.0)
}
