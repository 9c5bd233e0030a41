//! Real and floating-point semantics of expressions, rounding-error
//! extraction and the relative-precision metric.

use std::collections::BTreeMap;
use std::fmt;

use rug::Float;
use thiserror::Error;

use super::expr::{Expr, OpKind};
use super::extreal::ExtReal;
use super::rounding::{Format, RoundingModel};

/// How square roots treat negative arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SqrtMode {
    /// `√|x|`, matching the square-root lens. This is the default.
    #[default]
    Abs,
    /// Negative arguments are a domain error.
    Strict,
}

/// Identifies one rounding site: the post-order index of the operation node
/// within its expression (or lens term) and its operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpSite {
    pub index: usize,
    pub op: OpKind,
}

impl fmt::Display for OpSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{} {}", self.index, self.op)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("variable '{0}' is not bound")]
    Unbound(String),
    #[error("value {value} of variable '{var}' is not representable in {format}")]
    NotRepresentable { var: String, value: f64, format: Format },
    #[error("domain violation at {site}: {reason}")]
    Domain { site: OpSite, reason: &'static str },
    #[error("result {value:e} at {site} is zero, subnormal or non-finite in {format}")]
    Range { site: OpSite, value: f64, format: Format },
}

/// Variable assignment to machine floats of the chosen format.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Valuation(BTreeMap<String, f64>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.0.insert(name.into(), value);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.insert(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &f64)> {
        self.0.iter()
    }

    /// Builds a valuation from parallel name/value slices.
    pub fn from_pairs<S: AsRef<str>>(names: &[S], values: &[f64]) -> Self {
        let mut v = Valuation::new();
        for (n, x) in names.iter().zip(values) {
            v.insert(n.as_ref(), *x);
        }
        v
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Valuation(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// The rounding errors recorded during one floating-point evaluation, in
/// evaluation (post-) order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DeltaLog {
    pub entries: Vec<(OpSite, ExtReal)>,
}

impl DeltaLog {
    pub fn deltas(&self) -> impl Iterator<Item = &ExtReal> {
        self.entries.iter().map(|(_, d)| d)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest `|δ|` in the log (zero when empty).
    pub fn max_abs(&self, prec: u32) -> ExtReal {
        self.deltas().fold(ExtReal::zero(prec), |m, d| m.max(d.abs()))
    }
}

/// Applies an operator exactly (at the precision of the arguments).
///
/// `Div` by zero is a domain error here; lenses that adopt the "0 when the
/// denominator vanishes" convention handle that case themselves.
pub fn exact_op(op: OpKind, args: &[ExtReal], mode: SqrtMode, site: OpSite) -> Result<ExtReal, EvalError> {
    Ok(match op {
        OpKind::Add => &args[0] + &args[1],
        OpKind::Sub => &args[0] - &args[1],
        OpKind::Mul => &args[0] * &args[1],
        OpKind::Div => {
            if args[1].is_zero() {
                return Err(EvalError::Domain {
                    site,
                    reason: "division by zero",
                });
            }
            &args[0] / &args[1]
        }
        OpKind::Sqrt => {
            if args[0].signum_i() < 0 {
                match mode {
                    SqrtMode::Abs => args[0].abs().sqrt(),
                    SqrtMode::Strict => {
                        return Err(EvalError::Domain {
                            site,
                            reason: "square root of a negative number",
                        })
                    }
                }
            } else {
                args[0].sqrt()
            }
        }
        OpKind::Log => {
            if args[0].signum_i() <= 0 {
                return Err(EvalError::Domain {
                    site,
                    reason: "logarithm of a nonpositive number",
                });
            }
            args[0].ln()
        }
    })
}

/// The correctly rounded result of one operation in `format`, without
/// range checks.
fn rounded_op(op: OpKind, args: &[f64], format: Format, mode: SqrtMode, site: OpSite) -> Result<f64, EvalError> {
    let r = match op {
        OpKind::Add => args[0] + args[1],
        OpKind::Sub => args[0] - args[1],
        OpKind::Mul => args[0] * args[1],
        OpKind::Div => {
            if args[1] == 0.0 {
                return Err(EvalError::Domain {
                    site,
                    reason: "division by zero",
                });
            }
            args[0] / args[1]
        }
        OpKind::Sqrt => {
            if args[0] < 0.0 && mode == SqrtMode::Strict {
                return Err(EvalError::Domain {
                    site,
                    reason: "square root of a negative number",
                });
            }
            args[0].abs().sqrt()
        }
        OpKind::Log => {
            if args[0] <= 0.0 {
                return Err(EvalError::Domain {
                    site,
                    reason: "logarithm of a nonpositive number",
                });
            }
            // MPFR rounds correctly at the target precision, unlike libm.
            return Ok(Float::with_val(format.precision(), args[0]).ln().to_f64());
        }
    };
    Ok(format.round(r))
}

/// Performs one rounded operation and extracts its rounding error
/// `δ = ln(computed / exact)`, where "exact" is the operation applied at
/// precision `prec` to the received arguments.
pub fn round_op(
    op: OpKind,
    args: &[f64],
    format: Format,
    prec: u32,
    mode: SqrtMode,
    site: OpSite,
) -> Result<(f64, ExtReal), EvalError> {
    let computed = rounded_op(op, args, format, mode, site)?;
    if op == OpKind::Log && computed == 0.0 {
        // ln 1 = 0 is computed exactly.
        return Ok((0.0, ExtReal::zero(prec)));
    }
    if !format.is_normal(computed) {
        return Err(EvalError::Range {
            site,
            value: computed,
            format,
        });
    }
    let xs: Vec<ExtReal> = args.iter().map(|&a| ExtReal::from_f64(a, prec)).collect();
    let exact = exact_op(op, &xs, mode, site)?;
    let delta = (&ExtReal::from_f64(computed, prec) / &exact).ln();
    Ok((computed, delta))
}

/// Exact real semantics at `prec` bits.
pub fn eval_real(e: &Expr, v: &Valuation, prec: u32) -> Result<ExtReal, EvalError> {
    eval_real_with(e, v, prec, SqrtMode::default())
}

pub fn eval_real_with(e: &Expr, v: &Valuation, prec: u32, mode: SqrtMode) -> Result<ExtReal, EvalError> {
    let mut counter = 0;
    real_rec(
        e,
        &|name| v.get(name).map(|x| ExtReal::from_f64(x, prec)),
        mode,
        &mut counter,
    )
}

/// Exact real semantics at an extended-precision valuation (used to evaluate
/// programs at witnesses, which are generally not machine numbers).
pub fn eval_real_ext(e: &Expr, lookup: &dyn Fn(&str) -> Option<ExtReal>, mode: SqrtMode) -> Result<ExtReal, EvalError> {
    let mut counter = 0;
    real_rec(e, lookup, mode, &mut counter)
}

fn real_rec(
    e: &Expr,
    lookup: &dyn Fn(&str) -> Option<ExtReal>,
    mode: SqrtMode,
    counter: &mut usize,
) -> Result<ExtReal, EvalError> {
    match e {
        Expr::Var(name) => lookup(name).ok_or_else(|| EvalError::Unbound(name.clone())),
        _ => {
            let args = e
                .children()
                .into_iter()
                .map(|c| real_rec(c, lookup, mode, counter))
                .collect::<Result<Vec<_>, _>>()?;
            let op = e.op().expect("non-variable");
            let site = OpSite { index: *counter, op };
            *counter += 1;
            exact_op(op, &args, mode, site)
        }
    }
}

/// Floating-point semantics under round-to-nearest, recording `δ` for every
/// rounding site at the default oracle precision.
pub fn eval_float(e: &Expr, v: &Valuation, m: &RoundingModel) -> Result<(f64, DeltaLog), EvalError> {
    eval_float_with(e, v, m, super::DEFAULT_PRECISION, SqrtMode::default())
}

pub fn eval_float_with(
    e: &Expr,
    v: &Valuation,
    m: &RoundingModel,
    prec: u32,
    mode: SqrtMode,
) -> Result<(f64, DeltaLog), EvalError> {
    let mut log = DeltaLog::default();
    let r = float_rec(e, v, m.format, prec, mode, &mut log)?;
    Ok((r, log))
}

fn float_rec(
    e: &Expr,
    v: &Valuation,
    format: Format,
    prec: u32,
    mode: SqrtMode,
    log: &mut DeltaLog,
) -> Result<f64, EvalError> {
    match e {
        Expr::Var(name) => {
            let x = v.get(name).ok_or_else(|| EvalError::Unbound(name.clone()))?;
            if !format.represents(x) {
                return Err(EvalError::NotRepresentable {
                    var: name.clone(),
                    value: x,
                    format,
                });
            }
            Ok(x)
        }
        _ => {
            let args = e
                .children()
                .into_iter()
                .map(|c| float_rec(c, v, format, prec, mode, log))
                .collect::<Result<Vec<_>, _>>()?;
            let op = e.op().expect("non-variable");
            let site = OpSite { index: log.len(), op };
            let (r, delta) = round_op(op, &args, format, prec, mode, site)?;
            log.entries.push((site, delta));
            Ok(r)
        }
    }
}

/// The relative-precision distance: 0 at (0,0), `|ln(x/y)|` for same-sign
/// nonzero values, `+∞` otherwise.
pub fn rp_distance(x: &ExtReal, y: &ExtReal) -> ExtReal {
    let prec = x.precision().max(y.precision());
    let (sx, sy) = (x.signum_i(), y.signum_i());
    if sx == 0 && sy == 0 {
        ExtReal::zero(prec)
    } else if sx == sy && x.is_finite() && y.is_finite() {
        (x / y).ln().abs()
    } else {
        ExtReal::infinity(prec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{parse_expr, unit_roundoff, DEFAULT_PRECISION};

    const P: u32 = DEFAULT_PRECISION;

    fn b64() -> RoundingModel {
        unit_roundoff(Format::Binary64)
    }

    #[test]
    fn real_semantics_on_integers() {
        let e = parse_expr("(Add (Mul a a) (Mul b b))").unwrap();
        let v = Valuation::new().with("a", 3.0).with("b", 4.0);
        assert_eq!(eval_real(&e, &v, P).unwrap().to_f64(), 25.0);
        let e = parse_expr("(Sqrt x)").unwrap();
        assert_eq!(
            eval_real(&e, &Valuation::new().with("x", 4.0), P).unwrap().to_f64(),
            2.0
        );
    }

    #[test]
    fn real_division_by_zero_is_domain_error() {
        let e = parse_expr("(Div x y)").unwrap();
        let v = Valuation::new().with("x", 1.0).with("y", 0.0);
        assert!(matches!(eval_real(&e, &v, P), Err(EvalError::Domain { .. })));
    }

    #[test]
    fn sqrt_modes() {
        let e = parse_expr("(Sqrt x)").unwrap();
        let v = Valuation::new().with("x", -4.0);
        assert_eq!(eval_real(&e, &v, P).unwrap().to_f64(), 2.0);
        assert!(eval_real_with(&e, &v, P, SqrtMode::Strict).is_err());
        let (r, _) = eval_float(&e, &v, &b64()).unwrap();
        assert_eq!(r, 2.0);
        assert!(eval_float_with(&e, &v, &b64(), P, SqrtMode::Strict).is_err());
    }

    #[test]
    fn exact_product_has_zero_delta() {
        let e = parse_expr("(Mul a b)").unwrap();
        let v = Valuation::new().with("a", 1.5).with("b", 2.25);
        let (r, log) = eval_float(&e, &v, &b64()).unwrap();
        assert_eq!(r, 3.375);
        assert_eq!(log.len(), 1);
        assert!(log.entries[0].1.is_zero());
    }

    #[test]
    fn absorbed_addend_delta_matches_independent_logarithm() {
        // 1 + 2^-60 rounds to 1, so δ = ln(1/(1+2^-60)) = -ln(1+2^-60).
        let e = parse_expr("(Add a b)").unwrap();
        let v = Valuation::new().with("a", 1.0).with("b", 2f64.powi(-60));
        let (r, log) = eval_float(&e, &v, &b64()).unwrap();
        assert_eq!(r, 1.0);
        let delta = &log.entries[0].1;
        // Independent oracle: the alternating series −(t − t²/2 + t³/3) for
        // t = 2^-60, truncated well below 2^-256 relative error.
        let t = ExtReal::pow2(-60, P).into_float();
        let t2 = Float::with_val(P, &t * &t);
        let t3 = Float::with_val(P, &t2 * &t);
        let t4 = Float::with_val(P, &t3 * &t);
        let t5 = Float::with_val(P, &t4 * &t);
        let series = Float::with_val(P, &t - Float::with_val(P, &t2 / 2u32)) + Float::with_val(P, &t3 / 3u32)
            - Float::with_val(P, &t4 / 4u32)
            + Float::with_val(P, &t5 / 5u32);
        let expected = ExtReal::from_float(-Float::with_val(P, series));
        let err = (delta - &expected).abs();
        assert!(err < ExtReal::pow2(-300, P), "δ = {delta}, expected {expected}");
        assert!(delta.abs() <= b64().eps_ext(P));
    }

    #[test]
    fn zero_result_is_a_range_error() {
        let e = parse_expr("(Sub a a)").unwrap();
        let v = Valuation::new().with("a", 1.0);
        assert!(matches!(eval_float(&e, &v, &b64()), Err(EvalError::Range { .. })));
        let e = parse_expr("(Mul a a)").unwrap();
        let v = Valuation::new().with("a", 1e-200);
        assert!(matches!(eval_float(&e, &v, &b64()), Err(EvalError::Range { .. })));
        let v = Valuation::new().with("a", 1e200);
        assert!(matches!(eval_float(&e, &v, &b64()), Err(EvalError::Range { .. })));
    }

    #[test]
    fn unbound_and_unrepresentable_inputs() {
        let e = parse_expr("(Add a b)").unwrap();
        let v = Valuation::new().with("a", 1.0);
        assert_eq!(eval_float(&e, &v, &b64()), Err(EvalError::Unbound("b".into())));
        let m32 = unit_roundoff(Format::Binary32);
        let v = Valuation::new().with("a", 0.1).with("b", 1.0);
        assert!(matches!(
            eval_float(&e, &v, &m32),
            Err(EvalError::NotRepresentable { .. })
        ));
    }

    #[test]
    fn binary32_deltas_respect_single_precision_eps() {
        let m32 = unit_roundoff(Format::Binary32);
        let e = parse_expr("(Div a b)").unwrap();
        let v = Valuation::new().with("a", 1.0).with("b", 3.0);
        let (r, log) = eval_float(&e, &v, &m32).unwrap();
        assert_eq!(r, (1.0f32 / 3.0f32) as f64);
        let d = log.entries[0].1.abs();
        assert!(d <= m32.eps_ext(P));
        assert!(d > b64().eps_ext(P));
    }

    #[test]
    fn float_evaluation_is_deterministic() {
        let e = parse_expr("(Sqrt (Add (Mul a x) (Sqrt b)))").unwrap();
        let v = Valuation::new().with("a", 1.3).with("x", 2.7).with("b", 0.9);
        let r1 = eval_float(&e, &v, &b64()).unwrap();
        let r2 = eval_float(&e, &v, &b64()).unwrap();
        assert_eq!(r1.0.to_bits(), r2.0.to_bits());
        assert_eq!(r1.1, r2.1);
        let sites: Vec<_> = r1.1.entries.iter().map(|(s, _)| s.op).collect();
        assert_eq!(sites, vec![OpKind::Mul, OpKind::Sqrt, OpKind::Add, OpKind::Sqrt]);
    }

    #[test]
    fn rp_metric_cases() {
        let z = ExtReal::zero(P);
        assert!(rp_distance(&z, &z).is_zero());
        let one = ExtReal::one(P);
        let m1 = -&one;
        assert!(rp_distance(&one, &m1).is_infinite());
        assert!(rp_distance(&one, &z).is_infinite());
        let d = ExtReal::from_f64(1e-10, P);
        let x = ExtReal::from_f64(-7.5, P);
        let y = &x * &d.exp();
        let err = (&rp_distance(&x, &y) - &d).abs();
        assert!(err < ExtReal::pow2(-240, P));
    }

    #[test]
    fn log_rounding_is_correct() {
        let m = b64();
        let (r, d) = round_op(
            OpKind::Log,
            &[10.0],
            m.format,
            P,
            SqrtMode::Abs,
            OpSite {
                index: 0,
                op: OpKind::Log,
            },
        )
        .unwrap();
        assert_eq!(r, std::f64::consts::LN_10);
        assert!(d.abs() <= m.eps_ext(P));
        let (r, d) = round_op(
            OpKind::Log,
            &[1.0],
            m.format,
            P,
            SqrtMode::Abs,
            OpSite {
                index: 0,
                op: OpKind::Log,
            },
        )
        .unwrap();
        assert_eq!(r, 0.0);
        assert!(d.is_zero());
    }
}
