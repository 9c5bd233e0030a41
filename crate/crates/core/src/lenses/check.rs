//! Randomized verification of the two lens conditions:
//!
//! 1. `f(x * b(t)) = f̃(x) * t` (checked as an RP residual ≤ `2^-(P/2)`),
//! 2. `‖b(t)‖ ≤ p` componentwise (with slack `2^-(P-16)`),
//!
//! for inputs drawn by a [`Sampler`] and output shifts `t` drawn from the
//! target bound box (uniformly, with a share of exact corners).

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::instance::{bind, forward_real, EvalConfig};
use super::object::Shift;
use super::spec::{LensError, LensSpec};
use crate::numerics::sample::Sampler;
use crate::numerics::{rp_distance, ExtReal};

/// Maximum number of redraws when an input falls outside a lens's domain.
pub const MAX_RETRIES: u64 = 64;

/// Counterexamples kept per report.
const KEEP: usize = 5;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Counterexample {
    pub sample: u64,
    pub inputs: Vec<f64>,
    /// Output shift in units of ε.
    pub shift_eps: Vec<f64>,
    /// Which condition failed (1 = exactness, 2 = bound).
    pub condition: u8,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditionReport {
    pub lens: String,
    pub source: String,
    pub target: String,
    pub samples: u64,
    /// Samples whose inputs could not be drawn inside the lens's domain.
    pub skipped: u64,
    pub failures: u64,
    /// log₂ of the largest exactness residual observed (−∞ if all exact).
    pub max_residual_log2: f64,
    /// Largest `|b(t)_i| / (p_i ε)` observed (0/0 counts as 0).
    pub max_norm_ratio: f64,
    pub counterexamples: Vec<Counterexample>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.failures == 0 && self.skipped == 0
    }
}

enum Outcome {
    Ok { residual: ExtReal, ratio: f64 },
    Skipped,
    Fail(Counterexample, ExtReal, f64),
}

fn log2_of(x: &ExtReal) -> f64 {
    if x.is_zero() {
        f64::NEG_INFINITY
    } else if x.is_infinite() {
        f64::INFINITY
    } else {
        // ln x / ln 2, good to double precision even far below 2^-1022.
        (&x.ln() / &ExtReal::ln2(x.precision())).to_f64()
    }
}

fn draw_shift(rng: &mut rand_chacha::ChaCha8Rng, spec: &LensSpec, cfg: &EvalConfig) -> (Shift, Vec<f64>) {
    let eps = cfg.eps();
    let corners = rng.gen_bool(0.25);
    let mut units = Vec::new();
    let vals = spec
        .target_bounds()
        .iter()
        .map(|q| {
            let u: f64 = if corners {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            } else {
                rng.gen_range(-1.0..=1.0)
            };
            units.push(u * q.to_f64());
            eps.mul_rational(q.as_rational())
                .mul_rational(&rug::Rational::from_f64(u).expect("finite"))
        })
        .collect();
    (Shift(vals), units)
}

fn one_sample(spec: &LensSpec, cfg: &EvalConfig, sampler: &Sampler, index: u64) -> Outcome {
    let n = spec.source().arity();
    for attempt in 0..MAX_RETRIES {
        let mut rng = sampler.rng_for(index, attempt);
        let inputs = sampler.draw(&mut rng, n, cfg.model.format);
        let inst = match bind(spec, &inputs, cfg) {
            Ok(i) => i,
            Err(LensError::Eval(_) | LensError::LogDomain { .. }) => continue,
            Err(e) => {
                return Outcome::Fail(
                    Counterexample {
                        sample: index,
                        inputs,
                        shift_eps: vec![],
                        condition: 1,
                        detail: e.to_string(),
                    },
                    ExtReal::infinity(cfg.prec),
                    f64::INFINITY,
                )
            }
        };
        let (t, units) = draw_shift(&mut rng, spec, cfg);
        return check_instance(spec, cfg, index, &inst, &t, units);
    }
    Outcome::Skipped
}

fn check_instance(
    spec: &LensSpec,
    cfg: &EvalConfig,
    index: u64,
    inst: &super::instance::LensInstance,
    t: &Shift,
    units: Vec<f64>,
) -> Outcome {
    let prec = cfg.prec;
    let fail = |condition: u8, detail: String, residual: ExtReal, ratio: f64| {
        Outcome::Fail(
            Counterexample {
                sample: index,
                inputs: inst.inputs().to_vec(),
                shift_eps: units.clone(),
                condition,
                detail,
            },
            residual,
            ratio,
        )
    };
    let b = inst.backward_unchecked(t);
    // Condition (2).
    let eps = cfg.eps();
    let slack = cfg.norm_slack();
    let mut ratio = 0.0f64;
    for (i, (bi, pi)) in b.0.iter().zip(spec.source_bounds()).enumerate() {
        let lim = eps.mul_rational(pi.as_rational());
        let a = bi.abs();
        if !a.is_zero() {
            ratio = ratio.max(if lim.is_zero() {
                f64::INFINITY
            } else {
                (&a / &lim).to_f64()
            });
        }
        if a > &lim + &slack {
            return fail(
                2,
                format!("|b(t)_{i}| = {a} exceeds {pi}·ε"),
                ExtReal::zero(prec),
                ratio,
            );
        }
    }
    // Condition (1).
    let xs: Vec<ExtReal> = inst.inputs().iter().map(|&x| ExtReal::from_f64(x, prec)).collect();
    let moved = match spec.source().act(&xs, &b) {
        Ok(m) => m,
        Err(e) => return fail(1, e.to_string(), ExtReal::infinity(prec), ratio),
    };
    let lhs = match forward_real(spec, &moved, cfg.sqrt_mode) {
        Ok(v) => v,
        Err(e) => {
            return fail(
                1,
                format!("exact map undefined at the witness: {e}"),
                ExtReal::infinity(prec),
                ratio,
            )
        }
    };
    let outs: Vec<ExtReal> = inst.outputs().iter().map(|&y| ExtReal::from_f64(y, prec)).collect();
    let rhs = match spec.target().act(&outs, t) {
        Ok(v) => v,
        Err(e) => return fail(1, e.to_string(), ExtReal::infinity(prec), ratio),
    };
    let tol = cfg.residual_tolerance();
    let mut worst = ExtReal::zero(prec);
    for (k, (l, r)) in lhs.iter().zip(&rhs).enumerate() {
        let d = rp_distance(l, r);
        if d > tol {
            return fail(1, format!("output {k}: f(x*b(t)) = {l} but f̃(x)*t = {r}"), d, ratio);
        }
        worst = worst.max(d);
    }
    Outcome::Ok { residual: worst, ratio }
}

/// Checks both lens conditions on `n_samples` random inputs and shifts.
pub fn check_conditions(spec: &LensSpec, n_samples: u64, cfg: &EvalConfig, sampler: &Sampler) -> ConditionReport {
    let outcomes: Vec<Outcome> = (0..n_samples)
        .into_par_iter()
        .map(|i| one_sample(spec, cfg, sampler, i))
        .collect();
    let mut report = ConditionReport {
        lens: spec.name().to_string(),
        source: spec.source().to_string(),
        target: spec.target().to_string(),
        samples: n_samples,
        skipped: 0,
        failures: 0,
        max_residual_log2: f64::NEG_INFINITY,
        max_norm_ratio: 0.0,
        counterexamples: Vec::new(),
    };
    let mut worst = ExtReal::zero(cfg.prec);
    for o in outcomes {
        match o {
            Outcome::Ok { residual, ratio } => {
                worst = worst.max(residual);
                report.max_norm_ratio = report.max_norm_ratio.max(ratio);
            }
            Outcome::Skipped => report.skipped += 1,
            Outcome::Fail(cx, residual, ratio) => {
                report.failures += 1;
                worst = worst.max(residual);
                report.max_norm_ratio = report.max_norm_ratio.max(ratio);
                if report.counterexamples.len() < KEEP {
                    report.counterexamples.push(cx);
                }
            }
        }
    }
    report.max_residual_log2 = log2_of(&worst);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contexts::Bound;
    use crate::lenses::spec::*;
    use crate::lenses::ShelObject;
    use crate::numerics::{unit_roundoff, Format};

    fn cfg() -> EvalConfig {
        EvalConfig::new(unit_roundoff(Format::Binary64))
    }

    #[test]
    fn add_passes() {
        let r = check_conditions(&lens_add(&Bound::from_int(3)), 200, &cfg(), &Sampler::default());
        assert!(r.passed(), "{r:?}");
        assert!(r.max_residual_log2 < -128.0);
    }

    #[test]
    fn sqrt_passes_on_negative_inputs_in_abs_mode() {
        let s = Sampler::default().domains(vec![crate::numerics::sample::InputDomain::Any]);
        let r = check_conditions(&lens_sqrt(&Bound::zero()), 200, &cfg(), &s);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn corrupted_mul_bound_fails_condition_two() {
        // Label the source p/2 instead of (p+1)/2.
        let p = Bound::from_int(1);
        let bad = lens_mul(&p).relabel_source_unchecked(ShelObject::base(2, p.half()));
        let r = check_conditions(&bad, 200, &cfg(), &Sampler::default());
        assert!(r.failures > 0);
        assert!(r.counterexamples.iter().all(|c| c.condition == 2));
    }

    #[test]
    fn corrupted_action_fails_condition_one() {
        // Claiming dmul's second component has no error at all is unsound.
        let l = lens_dmul(0, &Bound::zero(), &Bound::zero());
        let bad = LensSpec::affine(
            "bad",
            l.source().clone(),
            l.target().clone(),
            vec![
                crate::lenses::Term::input(0),
                crate::lenses::Term::op(
                    crate::numerics::OpKind::Mul,
                    vec![crate::lenses::Term::input(0), crate::lenses::Term::input(1)],
                ),
            ],
            vec![vec![1.into(), 0.into()], vec![0.into(), 1.into()]],
            Some(vec![vec![0.into()], vec![0.into()]]),
        )
        .unwrap();
        let r = check_conditions(&bad, 100, &cfg(), &Sampler::default());
        assert!(r.failures > 0);
        assert!(r.counterexamples.iter().any(|c| c.condition == 1));
    }
}
