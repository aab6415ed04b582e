//! Order-independent summation.
//!
//! Weights are accumulated in a 128-bit fixed-point register with 96
//! fractional bits. Integer addition is associative, so a sum never depends
//! on the order in which terms arrive. That makes outputs independent of the
//! sample order of the input and of how work is split across threads.

use crate::Scalar;

const FRACTION_BITS: i32 = 96;
const SCALE: f64 = (1u128 << FRACTION_BITS) as f64;

/// Fixed-point image of a nonnegative real. Terms below 2^-96 truncate to zero.
#[inline]
pub(crate) fn to_fixed<T: Scalar>(value: T) -> i128 {
    let v = value.as_f64();
    debug_assert!(v >= 0.0 && v < 1e9, "fixed-point term out of range: {v}");
    (v * SCALE) as i128
}

#[inline]
pub(crate) fn from_fixed(value: i128) -> f64 {
    value as f64 / SCALE
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ExactSum(i128);

impl ExactSum {
    #[inline]
    pub(crate) fn add<T: Scalar>(&mut self, value: T) {
        self.0 += to_fixed(value);
    }

    #[cfg(test)]
    pub(crate) fn raw(self) -> i128 {
        self.0
    }

    #[inline]
    pub(crate) fn value(self) -> f64 {
        from_fixed(self.0)
    }
}
