//! Dual-mode scalars: exact rationals or tolerance-tagged doubles.
//!
//! Arithmetic between an exact and an approximate value promotes to the
//! approximate mode.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::Value;

use crate::error::{Error, Result};

/// Default comparison tolerance for doubles.
pub const DEFAULT_EPS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericMode {
    Rational,
    Double,
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NumericMode::Rational => "rational",
            NumericMode::Double => "double",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Num {
    Exact(BigRational),
    Approx(f64),
}

impl Num {
    pub fn int(v: i64) -> Num {
        Num::Exact(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn ratio(n: i64, d: i64) -> Num {
        Num::Exact(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn approx(v: f64) -> Num {
        Num::Approx(v)
    }

    pub fn zero() -> Num {
        Num::int(0)
    }

    pub fn one() -> Num {
        Num::int(1)
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Num::Exact(_))
    }

    pub fn mode(&self) -> NumericMode {
        if self.is_exact() {
            NumericMode::Rational
        } else {
            NumericMode::Double
        }
    }

    pub fn rational(&self) -> Option<&BigRational> {
        match self {
            Num::Exact(r) => Some(r),
            Num::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Num::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Num::Approx(v) => *v,
        }
    }

    /// Convert to the approximate mode.
    pub fn to_approx(&self) -> Num {
        Num::Approx(self.to_f64())
    }

    pub fn is_zero_eps(&self, eps: f64) -> bool {
        match self {
            Num::Exact(r) => r.is_zero(),
            Num::Approx(v) => v.abs() <= eps,
        }
    }

    pub fn is_negative_eps(&self, eps: f64) -> bool {
        match self {
            Num::Exact(r) => r.is_negative(),
            Num::Approx(v) => *v < -eps,
        }
    }

    pub fn is_positive_eps(&self, eps: f64) -> bool {
        match self {
            Num::Exact(r) => r.is_positive(),
            Num::Approx(v) => *v > eps,
        }
    }

    /// Equality: exact when both are rational, within `eps` otherwise.
    pub fn approx_eq(&self, other: &Num, eps: f64) -> bool {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => a == b,
            _ => (self.to_f64() - other.to_f64()).abs() <= eps,
        }
    }

    /// Ordering with ties inside `eps` for approximate values.
    pub fn cmp_eps(&self, other: &Num, eps: f64) -> Ordering {
        match (self, other) {
            (Num::Exact(a), Num::Exact(b)) => a.cmp(b),
            _ => {
                let d = self.to_f64() - other.to_f64();
                if d.abs() <= eps {
                    Ordering::Equal
                } else if d < 0.0 {
                    Ordering::Less
                } else {
                    Ordering::Greater
                }
            }
        }
    }

    /// JSON form: `"num/den"` (or `"num"` for integers) for rationals, a
    /// number for doubles.
    pub fn to_json(&self) -> Value {
        match self {
            Num::Exact(_) => Value::String(self.to_string()),
            Num::Approx(v) => serde_json::Number::from_f64(*v).map(Value::Number).unwrap_or(Value::Null),
        }
    }

    /// Parse a JSON value. Strings and integers are exact; other numbers
    /// are doubles.
    pub fn from_json(v: &Value) -> Result<Num> {
        match v {
            Value::String(s) => Num::parse_rational(s),
            Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(Num::int(i))
                } else {
                    n.as_f64().map(Num::Approx).ok_or_else(|| Error::Parse(format!("bad number {n}")))
                }
            }
            other => Err(Error::Parse(format!("expected number or \"num/den\", got {other}"))),
        }
    }

    pub fn parse_rational(s: &str) -> Result<Num> {
        let bad = || Error::Parse(format!("bad rational {s:?}"));
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s.trim(), "1"),
        };
        let n: BigInt = n.parse().map_err(|_| bad())?;
        let d: BigInt = d.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Num::Exact(BigRational::new(n, d)))
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num::Exact(r) if r.is_integer() => write!(f, "{}", r.numer()),
            Num::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Num::Approx(v) => write!(f, "{v}"),
        }
    }
}

impl serde::Serialize for Num {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl From<i64> for Num {
    fn from(v: i64) -> Num {
        Num::int(v)
    }
}

impl From<f64> for Num {
    fn from(v: f64) -> Num {
        Num::Approx(v)
    }
}

impl From<BigRational> for Num {
    fn from(v: BigRational) -> Num {
        Num::Exact(v)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr<&Num> for &Num {
            type Output = Num;
            fn $m(self, o: &Num) -> Num {
                match (self, o) {
                    (Num::Exact(a), Num::Exact(b)) => Num::Exact(a $op b),
                    _ => Num::Approx(self.to_f64() $op o.to_f64()),
                }
            }
        }
        impl $tr<Num> for Num {
            type Output = Num;
            fn $m(self, o: Num) -> Num {
                (&self).$m(&o)
            }
        }
        impl $tr<&Num> for Num {
            type Output = Num;
            fn $m(self, o: &Num) -> Num {
                (&self).$m(o)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl Neg for &Num {
    type Output = Num;
    fn neg(self) -> Num {
        match self {
            Num::Exact(a) => Num::Exact(-a),
            Num::Approx(v) => Num::Approx(-v),
        }
    }
}

impl Neg for Num {
    type Output = Num;
    fn neg(self) -> Num {
        -&self
    }
}

impl Sum for Num {
    fn sum<I: Iterator<Item = Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |a, b| a + b)
    }
}

impl<'a> Sum<&'a Num> for Num {
    fn sum<I: Iterator<Item = &'a Num>>(iter: I) -> Num {
        iter.fold(Num::zero(), |a, b| a + b)
    }
}

/// The mode of a collection: rational only if every entry is.
pub fn mode_of<'a>(xs: impl IntoIterator<Item = &'a Num>) -> NumericMode {
    if xs.into_iter().all(Num::is_exact) {
        NumericMode::Rational
    } else {
        NumericMode::Double
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn promotion() {
        let a = Num::ratio(1, 3);
        let b = Num::approx(0.5);
        assert!(!(&a + &b).is_exact());
        assert!((&a + &a).is_exact());
        assert_eq!(&a + &a, Num::ratio(2, 3));
    }

    #[test]
    fn canonical_rationals() {
        assert_eq!(Num::ratio(2, 4), Num::ratio(1, 2));
        assert_eq!(Num::ratio(2, 4).to_json(), Value::String("1/2".into()));
        assert_eq!(Num::parse_rational("-6/8").unwrap(), Num::ratio(-3, 4));
        assert_eq!(Num::parse_rational("3").unwrap(), Num::int(3));
        assert!(Num::parse_rational("1/0").is_err());
    }

    #[test]
    fn tolerant_comparisons() {
        assert!(Num::approx(1e-12).is_zero_eps(DEFAULT_EPS));
        assert!(Num::approx(0.5).approx_eq(&Num::ratio(1, 2), 1e-15));
        assert_eq!(Num::approx(1.0).cmp_eps(&Num::approx(1.0 + 1e-12), 1e-9), Ordering::Equal);
    }
}
