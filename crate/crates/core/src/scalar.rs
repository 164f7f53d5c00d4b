//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar the capacity formulas are evaluated in.
///
/// Implemented for `f32` and `f64`. Rate regions are O(10) bits, so both
/// precisions are usable; the tolerances below scale with the type.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Absolute tolerance for rate comparisons (membership, dedup, dominance).
    fn rate_tol() -> Self;
    /// Tolerance when checking that probability vectors sum to one.
    fn prob_tol() -> Self;

    /// Lossless for the literals used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f64 {
    fn rate_tol() -> Self {
        1e-9
    }
    fn prob_tol() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn rate_tol() -> Self {
        1e-4
    }
    fn prob_tol() -> Self {
        1e-5
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T> {
    sum: T,
    carry: T,
}

impl<T: Real> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            carry: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry = self.carry + ((self.sum - t) + x);
        } else {
            self.carry = self.carry + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.carry
    }
}

impl<T: Real> FromIterator<T> for CompensatedSum<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_lost_bits() {
        let mut naive = 0.0f64;
        let mut acc = CompensatedSum::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            naive += x;
            acc.add(x);
        }
        assert_eq!(naive, 0.0);
        assert_eq!(acc.value(), 2.0);
    }

    #[test]
    fn tolerances_scale_with_precision() {
        assert!(f32::rate_tol() > f64::rate_tol() as f32);
        assert!(f32::prob_tol() > f64::prob_tol() as f32);
    }
}
