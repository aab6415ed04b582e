//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::Float;

/// Real scalar type the distance pipelines are generic over.
///
/// Implemented for `f32` and `f64`. Weighted-vector accumulation is carried
/// out in an exact fixed-point register regardless of `Self`, so the choice
/// only affects storage precision and the original-distance arithmetic.
pub trait Scalar:
    Float + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed deviation of a weight vector's L1 mass from one.
    const MASS_TOLERANCE: f64;

    fn of(value: f64) -> Self;

    fn as_f64(self) -> f64;
}

impl Scalar for f64 {
    const MASS_TOLERANCE: f64 = 1e-6;

    #[inline]
    fn of(value: f64) -> Self {
        value
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Scalar for f32 {
    const MASS_TOLERANCE: f64 = 1e-5;

    #[inline]
    fn of(value: f64) -> Self {
        value as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        f64::from(self)
    }
}
