//! Extended-precision reals backed by MPFR.
//!
//! `ExtReal` is the oracle number type: every exact-real computation in the
//! crate (reference semantics, rounding errors, shift actions, residuals) is
//! carried out at a configurable binary precision, 256 bits by default.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::{Constant, Special};
use rug::ops::Pow;
use rug::{Float, Rational};

/// Default working precision of the oracle, in bits.
pub const DEFAULT_PRECISION: u32 = 256;

/// Smallest precision accepted by the oracle.
pub const MIN_PRECISION: u32 = 128;

/// A real number (or ±∞) carried at a fixed binary precision.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct ExtReal(Float);

impl ExtReal {
    pub fn zero(prec: u32) -> Self {
        ExtReal(Float::with_val(prec, Special::Zero))
    }

    pub fn one(prec: u32) -> Self {
        ExtReal(Float::with_val(prec, 1))
    }

    pub fn infinity(prec: u32) -> Self {
        ExtReal(Float::with_val(prec, Special::Infinity))
    }

    pub fn from_f64(x: f64, prec: u32) -> Self {
        ExtReal(Float::with_val(prec, x))
    }

    pub fn from_i64(x: i64, prec: u32) -> Self {
        ExtReal(Float::with_val(prec, x))
    }

    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        ExtReal(Float::with_val(prec, q))
    }

    /// `2^k` exactly.
    pub fn pow2(k: i32, prec: u32) -> Self {
        let mut f = Float::with_val(prec, 1);
        f <<= k;
        ExtReal(f)
    }

    /// ln 2 at the given precision.
    pub fn ln2(prec: u32) -> Self {
        ExtReal(Float::with_val(prec, Constant::Log2))
    }

    pub fn from_float(f: Float) -> Self {
        ExtReal(f)
    }

    pub fn as_float(&self) -> &Float {
        &self.0
    }

    pub fn into_float(self) -> Float {
        self.0
    }

    pub fn precision(&self) -> u32 {
        self.0.prec()
    }

    /// Re-rounds to a different precision.
    pub fn with_precision(&self, prec: u32) -> Self {
        ExtReal(Float::with_val(prec, &self.0))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_infinite(&self) -> bool {
        self.0.is_infinite()
    }

    pub fn is_nan(&self) -> bool {
        self.0.is_nan()
    }

    /// Sign as -1, 0 or +1 (NaN maps to 0).
    pub fn signum_i(&self) -> i32 {
        match self.0.cmp0() {
            Some(Ordering::Less) => -1,
            Some(Ordering::Greater) => 1,
            _ => 0,
        }
    }

    pub fn abs(&self) -> Self {
        ExtReal(self.0.clone().abs())
    }

    pub fn sqrt(&self) -> Self {
        ExtReal(self.0.clone().sqrt())
    }

    pub fn ln(&self) -> Self {
        ExtReal(self.0.clone().ln())
    }

    pub fn exp(&self) -> Self {
        ExtReal(self.0.clone().exp())
    }

    /// Multiplies by an exact rational.
    pub fn mul_rational(&self, q: &Rational) -> Self {
        ExtReal(Float::with_val(self.precision(), &self.0 * q))
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        ExtReal(Float::with_val(self.precision(), &self.0 * k))
    }

    pub fn powi(&self, k: i32) -> Self {
        ExtReal(Float::with_val(self.precision(), (&self.0).pow(k)))
    }

    pub fn max(self, other: Self) -> Self {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }

    fn prec2(&self, other: &ExtReal) -> u32 {
        self.precision().max(other.precision())
    }
}

impl<'a> Add<&'a ExtReal> for &'a ExtReal {
    type Output = ExtReal;
    fn add(self, rhs: &'a ExtReal) -> ExtReal {
        ExtReal(Float::with_val(self.prec2(rhs), &self.0 + &rhs.0))
    }
}

impl<'a> Sub<&'a ExtReal> for &'a ExtReal {
    type Output = ExtReal;
    fn sub(self, rhs: &'a ExtReal) -> ExtReal {
        ExtReal(Float::with_val(self.prec2(rhs), &self.0 - &rhs.0))
    }
}

impl<'a> Mul<&'a ExtReal> for &'a ExtReal {
    type Output = ExtReal;
    fn mul(self, rhs: &'a ExtReal) -> ExtReal {
        ExtReal(Float::with_val(self.prec2(rhs), &self.0 * &rhs.0))
    }
}

impl<'a> Div<&'a ExtReal> for &'a ExtReal {
    type Output = ExtReal;
    fn div(self, rhs: &'a ExtReal) -> ExtReal {
        ExtReal(Float::with_val(self.prec2(rhs), &self.0 / &rhs.0))
    }
}

impl Neg for &ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        ExtReal(Float::with_val(self.precision(), -&self.0))
    }
}

impl PartialEq<f64> for ExtReal {
    fn eq(&self, other: &f64) -> bool {
        self.0 == *other
    }
}

impl PartialOrd<f64> for ExtReal {
    fn partial_cmp(&self, other: &f64) -> Option<Ordering> {
        self.0.partial_cmp(other)
    }
}

impl fmt::Debug for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // 20 significant digits is plenty for diagnostics.
        write!(f, "{}", self.0.to_string_radix(10, Some(20)))
    }
}
