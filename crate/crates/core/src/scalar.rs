//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar the indicator and model code is generic over: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("f64 literal representable")
    }

    /// Lossy conversion from a count.
    fn count(n: usize) -> Self {
        <Self as NumCast>::from(n).expect("count representable")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

/// `ln(1 + exp(z))` without overflow.
pub fn softplus<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_bounded_and_symmetric() {
        for &z in &[-800.0f64, -30.0, -1.0, 0.0, 1.0, 30.0, 800.0] {
            let s = sigmoid(z);
            assert!((0.0..=1.0).contains(&s));
            assert!((s + sigmoid(-z) - 1.0).abs() < 1e-12);
        }
        assert_eq!(sigmoid(0.0f32), 0.5);
    }

    #[test]
    fn softplus_matches_naive_in_safe_range() {
        for &z in &[-5.0f64, -0.5, 0.0, 0.5, 5.0] {
            assert!((softplus(z) - (1.0 + z.exp()).ln()).abs() < 1e-12);
        }
        assert!(softplus(1000.0f64).is_finite());
    }
}
