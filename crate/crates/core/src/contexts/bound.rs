//! Exact nonnegative rational error bounds, in units of ε.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use rug::{Integer, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A nonnegative exact rational bound, measured in multiples of ε.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Bound(Rational);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("bounds must be nonnegative, got {0}")]
    Negative(String),
    #[error("cannot parse bound '{0}' (expected an integer, p/q or a finite decimal)")]
    Syntax(String),
}

impl Bound {
    pub fn zero() -> Self {
        Bound(Rational::new())
    }

    pub fn from_int(n: u64) -> Self {
        Bound(Rational::from(n))
    }

    /// `num/den`.
    ///
    /// # Panics
    /// If `den` is zero.
    pub fn ratio(num: u64, den: u64) -> Self {
        assert!(den != 0, "zero denominator");
        Bound(Rational::from((num, den)))
    }

    pub fn new(q: Rational) -> Result<Self, BoundError> {
        if q < 0 {
            Err(BoundError::Negative(q.to_string()))
        } else {
            Ok(Bound(q))
        }
    }

    pub fn as_rational(&self) -> &Rational {
        &self.0
    }

    pub fn into_rational(self) -> Rational {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0 == 0
    }

    /// `p + 1`.
    pub fn succ(&self) -> Bound {
        Bound(Rational::from(&self.0 + 1u32))
    }

    /// `p / 2`.
    pub fn half(&self) -> Bound {
        Bound(Rational::from(&self.0 / 2u32))
    }

    /// `k · p`.
    pub fn scale(&self, k: u64) -> Bound {
        Bound(Rational::from(&self.0 * Integer::from(k)))
    }

    /// `p · q` for an arbitrary nonnegative rational factor.
    pub fn times(&self, q: &Rational) -> Bound {
        Bound::new(Rational::from(&self.0 * q)).expect("product of nonnegative factors")
    }

    pub fn max(self, other: Bound) -> Bound {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Nearest `f64`, for display and plotting only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    /// Parses `n`, `p/q`, or a finite decimal such as `1.5`.
    pub fn parse(s: &str) -> Result<Bound, BoundError> {
        let t = s.trim();
        let q = if let Some((int, frac)) = t.split_once('.') {
            let digits_ok = |d: &str| d.chars().all(|c| c.is_ascii_digit());
            if !digits_ok(int) || !digits_ok(frac) || (int.is_empty() && frac.is_empty()) {
                return Err(BoundError::Syntax(s.to_string()));
            }
            let num: Integer = format!("{int}{frac}")
                .parse()
                .map_err(|_| BoundError::Syntax(s.to_string()))?;
            let den = rug::ops::Pow::pow(Integer::from(10), frac.len() as u32);
            Rational::from((num, den))
        } else {
            Rational::from_str(t).map_err(|_| BoundError::Syntax(s.to_string()))?
        };
        Bound::new(q)
    }
}

impl FromStr for Bound {
    type Err = BoundError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bound::parse(s)
    }
}

impl<'a> Add<&'a Bound> for &'a Bound {
    type Output = Bound;
    fn add(self, rhs: &'a Bound) -> Bound {
        Bound(Rational::from(&self.0 + &rhs.0))
    }
}

impl Add for Bound {
    type Output = Bound;
    fn add(self, rhs: Bound) -> Bound {
        Bound(self.0 + rhs.0)
    }
}

impl<'a> Mul<&'a Bound> for &'a Bound {
    type Output = Bound;
    fn mul(self, rhs: &'a Bound) -> Bound {
        Bound(Rational::from(&self.0 * &rhs.0))
    }
}

impl From<u64> for Bound {
    fn from(n: u64) -> Self {
        Bound::from_int(n)
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Bound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Bound {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Bound::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_transformations() {
        let p = Bound::from_int(2);
        assert_eq!(p.succ().half(), Bound::ratio(3, 2));
        assert_eq!(p.scale(2).succ().succ(), Bound::from_int(6));
        assert_eq!(Bound::zero().succ().half().to_string(), "1/2");
    }

    #[test]
    fn parsing_and_printing() {
        assert_eq!(Bound::parse("3/2").unwrap(), Bound::ratio(3, 2));
        assert_eq!(Bound::parse("1.5").unwrap(), Bound::ratio(3, 2));
        assert_eq!(Bound::parse("4").unwrap().to_string(), "4");
        assert_eq!(Bound::parse("6/4").unwrap().to_string(), "3/2");
        assert!(matches!(Bound::parse("-1"), Err(BoundError::Negative(_))));
        assert!(matches!(Bound::parse("x"), Err(BoundError::Syntax(_))));
        assert!(matches!(Bound::parse("."), Err(BoundError::Syntax(_))));
    }

    #[test]
    fn serde_uses_rational_strings() {
        let b = Bound::ratio(5, 2);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, "\"5/2\"");
        let back: Bound = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
