//! The per-operation rounding model: every primitive operation returns
//! `(x op y)·e^δ` with `|δ| ≤ ε = u/(1−u)` as long as no overflow or
//! underflow occurs.

use std::fmt;
use std::str::FromStr;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::extreal::ExtReal;

/// Supported IEEE 754 binary interchange formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binary32,
    Binary64,
}

impl Format {
    /// Significand precision in bits (including the hidden bit).
    pub fn precision(self) -> u32 {
        match self {
            Format::Binary32 => 24,
            Format::Binary64 => 53,
        }
    }

    fn max_exponent(self) -> i32 {
        match self {
            Format::Binary32 => 127,
            Format::Binary64 => 1023,
        }
    }

    /// Rounds an `f64` to the nearest value of this format. Exact for
    /// binary64; for binary32, a binary64 result of a single basic
    /// operation on binary32 operands rounds correctly (53 ≥ 2·24 + 2).
    pub fn round(self, x: f64) -> f64 {
        match self {
            Format::Binary64 => x,
            Format::Binary32 => x as f32 as f64,
        }
    }

    /// Whether `x` is finite, nonzero and normal in this format.
    pub fn is_normal(self, x: f64) -> bool {
        match self {
            Format::Binary64 => x.is_normal(),
            Format::Binary32 => (x as f32).is_normal() && (x as f32) as f64 == x,
        }
    }

    /// Whether `x` is exactly representable in this format.
    pub fn represents(self, x: f64) -> bool {
        match self {
            Format::Binary64 => true,
            Format::Binary32 => x.is_nan() || (x as f32) as f64 == x,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Format::Binary32 => "binary32",
            Format::Binary64 => "binary64",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unsupported floating-point format '{0}' (expected binary32 or binary64)")]
pub struct UnsupportedFormat(pub String);

impl FromStr for Format {
    type Err = UnsupportedFormat;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "binary64" | "f64" | "double" => Ok(Format::Binary64),
            "binary32" | "f32" | "single" => Ok(Format::Binary32),
            _ => Err(UnsupportedFormat(s.to_string())),
        }
    }
}

/// Rounding parameters of a format, as exact rationals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundingModel {
    pub format: Format,
    /// Unit roundoff `u = 2^-p`.
    pub u: Rational,
    /// `ε = u/(1−u)`.
    pub eps: Rational,
    /// Largest finite value of the format.
    pub max_finite: Rational,
}

impl RoundingModel {
    /// `ε` as an extended-precision real.
    pub fn eps_ext(&self, prec: u32) -> ExtReal {
        ExtReal::from_rational(&self.eps, prec)
    }

    /// `ε` as the nearest `f64` (for reporting only).
    pub fn eps_f64(&self) -> f64 {
        self.eps.to_f64()
    }
}

/// The rounding model of a format under round-to-nearest.
pub fn unit_roundoff(format: Format) -> RoundingModel {
    let p = format.precision();
    let u = Rational::from((Integer::from(1), Integer::from(1) << p));
    let eps = &u / (Rational::from(1) - &u);
    // (2 − 2^{1−p}) · 2^{emax}
    let two = Rational::from(2);
    let ulp_one = Rational::from((Integer::from(1), Integer::from(1) << (p - 1)));
    let max_finite = Rational::from(&two - &ulp_one) * Rational::from(Integer::from(1) << format.max_exponent() as u32);
    RoundingModel {
        format,
        u,
        eps,
        max_finite,
    }
}

/// Looks up a rounding model by format name.
pub fn rounding_model(name: &str) -> Result<RoundingModel, UnsupportedFormat> {
    Ok(unit_roundoff(name.parse()?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary64_parameters() {
        let m = unit_roundoff(Format::Binary64);
        assert_eq!(m.u, Rational::from((1, Integer::from(1) << 53)));
        // eps = 2^-53 / (1 - 2^-53) = 1 / (2^53 - 1)
        assert_eq!(m.eps, Rational::from((1, (Integer::from(1) << 53) - 1)));
        assert_eq!(m.max_finite.to_f64(), f64::MAX);
        assert_eq!(m.eps, (&m.u / (1 - m.u.clone())));
    }

    #[test]
    fn binary32_parameters() {
        let m = unit_roundoff(Format::Binary32);
        assert_eq!(m.u, Rational::from((1, 1 << 24)));
        assert_eq!(m.max_finite.to_f64(), f32::MAX as f64);
    }

    #[test]
    fn format_names() {
        assert_eq!("binary64".parse::<Format>().unwrap(), Format::Binary64);
        assert_eq!("BINARY32".parse::<Format>().unwrap(), Format::Binary32);
        assert!(rounding_model("binary16").is_err());
    }

    #[test]
    fn binary32_rounding_and_range() {
        let f = Format::Binary32;
        assert_eq!(f.round(1.0 + 2f64.powi(-30)), 1.0);
        assert!(f.is_normal(1.5));
        assert!(!f.is_normal(1e-40));
        assert!(!f.is_normal(1e39));
        assert!(f.represents(0.5) && !f.represents(0.1));
    }
}
