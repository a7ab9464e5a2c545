//! Arithmetic backends for the simplex.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Ordered field used by the solver. Comparisons on the inexact backend
/// treat values within its tolerance as zero.
pub trait Scalar: Clone + Debug + PartialEq + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
    fn is_negative(&self) -> bool;
    fn abs(&self) -> Self {
        if self.is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }
    /// Strictly less, beyond tolerance.
    fn lt(&self, o: &Self) -> bool {
        o.sub(self).is_positive()
    }
    fn to_f64(&self) -> f64;
    /// Whether arithmetic is exact.
    fn exact() -> bool;
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        Signed::is_positive(self)
    }
    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn exact() -> bool {
        true
    }
}

/// Default tolerance of the floating backend.
pub const EPS: f64 = 1e-9;

/// Double with tolerant comparisons at [`EPS`].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Default)]
pub struct Tol(pub f64);

impl Scalar for Tol {
    fn zero() -> Self {
        Tol(0.0)
    }
    fn one() -> Self {
        Tol(1.0)
    }
    fn from_i64(v: i64) -> Self {
        Tol(v as f64)
    }
    fn add(&self, o: &Self) -> Self {
        Tol(self.0 + o.0)
    }
    fn sub(&self, o: &Self) -> Self {
        Tol(self.0 - o.0)
    }
    fn mul(&self, o: &Self) -> Self {
        Tol(self.0 * o.0)
    }
    fn div(&self, o: &Self) -> Self {
        Tol(self.0 / o.0)
    }
    fn neg(&self) -> Self {
        Tol(-self.0)
    }
    fn is_zero(&self) -> bool {
        self.0.abs() <= EPS
    }
    fn is_positive(&self) -> bool {
        self.0 > EPS
    }
    fn is_negative(&self) -> bool {
        self.0 < -EPS
    }
    fn to_f64(&self) -> f64 {
        self.0
    }
    fn exact() -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerant_zero() {
        assert!(Tol(1e-12).is_zero());
        assert!(!Tol(1e-6).is_zero());
        assert!(Tol(-1e-6).is_negative());
    }

    #[test]
    fn rational_signs() {
        let r = BigRational::new(BigInt::from(-1), BigInt::from(3));
        assert!(Scalar::is_negative(&r));
        assert_eq!(Scalar::abs(&r), BigRational::new(BigInt::from(1), BigInt::from(3)));
    }
}
