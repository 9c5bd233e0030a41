//! Sampled certification of backward stability claims.
//!
//! For each sampled machine input `x`, a witness `x̃` is produced (by a lens
//! or a closed form) and two facts are checked at the oracle precision:
//! `f(x̃) = f̃(x)` up to the residual tolerance, and `RP(xᵢ, x̃ᵢ) ≤ pᵢ·ε`
//! up to the norm slack.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::contexts::Bound;
use crate::lenses::{bind, EvalConfig, LensError, LensSpec, MAX_RETRIES};
use crate::numerics::sample::Sampler;
use crate::numerics::{eval_float_with, eval_real_ext, rp_distance, Expr, ExtReal, Valuation};
use crate::synth::{derivation_to_lens, BoundReport, Derivation, ExtractError};

/// Counterexamples kept per report.
const KEEP: usize = 5;

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CertifyCounterexample {
    pub sample: u64,
    pub inputs: Vec<f64>,
    pub detail: String,
}

/// Outcome of certifying one claim.
#[derive(Clone, Debug, Serialize)]
pub struct StabilityReport {
    pub program: String,
    /// Claimed bound per variable (ε units).
    pub claimed: IndexMap<String, Bound>,
    pub samples: u64,
    /// Samples for which no input inside the program's domain was found.
    pub skipped: u64,
    /// Largest observed `RP(xᵢ, x̃ᵢ)/ε` per variable.
    pub max_ratio: IndexMap<String, f64>,
    /// log₂ of the largest residual `RP(f(x̃), f̃(x))` (−∞ if all exact).
    pub max_residual_log2: f64,
    pub failures: u64,
    pub passed: bool,
    pub counterexamples: Vec<CertifyCounterexample>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("the derivation's variables {derivation:?} do not match the report's {report:?}")]
    VariableMismatch {
        derivation: Vec<String>,
        report: Vec<String>,
    },
    #[error("the extracted lens has source bounds {lens:?} but the report claims {report:?}")]
    BoundMismatch { lens: Vec<String>, report: Vec<String> },
    #[error("claimed bounds for {claimed} variables but the program has {vars}")]
    Arity { claimed: usize, vars: usize },
    #[error(transparent)]
    Extract(#[from] ExtractError),
}

/// Why a single sample could not produce a witness.
pub enum WitnessFailure {
    /// The input is outside the program's domain; draw again.
    Domain,
    /// A genuine failure, reported as a counterexample.
    Fail(String),
}

/// A witness producer: machine inputs (in variable order) to the computed
/// output `f̃(x)` and the witness `x̃`.
pub trait WitnessFn: Fn(&[f64]) -> Result<(f64, Vec<ExtReal>), WitnessFailure> + Sync {}
impl<T: Fn(&[f64]) -> Result<(f64, Vec<ExtReal>), WitnessFailure> + Sync> WitnessFn for T {}

enum Outcome {
    Ok { residual: ExtReal, ratios: Vec<f64> },
    Skipped,
    Fail(CertifyCounterexample, ExtReal, Vec<f64>),
}

fn log2_of(x: &ExtReal) -> f64 {
    if x.is_zero() {
        f64::NEG_INFINITY
    } else if x.is_infinite() {
        f64::INFINITY
    } else {
        (&x.ln() / &ExtReal::ln2(x.precision())).to_f64()
    }
}

fn one_sample(
    program: &Expr,
    vars: &[String],
    claimed: &[Bound],
    cfg: &EvalConfig,
    sampler: &Sampler,
    index: u64,
    witness: &dyn WitnessFn,
) -> Outcome {
    let prec = cfg.prec;
    for attempt in 0..MAX_RETRIES {
        let mut rng = sampler.rng_for(index, attempt);
        let inputs = sampler.draw(&mut rng, vars.len(), cfg.model.format);
        let fail = |detail: String, residual: ExtReal, ratios: Vec<f64>| {
            Outcome::Fail(
                CertifyCounterexample {
                    sample: index,
                    inputs: inputs.clone(),
                    detail,
                },
                residual,
                ratios,
            )
        };
        let valuation = Valuation::from_pairs(vars, &inputs);
        let Ok((computed, _)) = eval_float_with(program, &valuation, &cfg.model, prec, cfg.sqrt_mode) else {
            continue;
        };
        let (out, xt) = match witness(&inputs) {
            Ok(w) => w,
            Err(WitnessFailure::Domain) => continue,
            Err(WitnessFailure::Fail(d)) => return fail(d, ExtReal::infinity(prec), vec![]),
        };
        if out.to_bits() != computed.to_bits() {
            return fail(
                format!("the witness producer computed {out} but the program computes {computed}"),
                ExtReal::infinity(prec),
                vec![],
            );
        }
        // Bound condition.
        let eps = cfg.eps();
        let slack = cfg.norm_slack();
        let mut ratios = Vec::with_capacity(vars.len());
        let mut violation = None;
        for (i, (x, w)) in inputs.iter().zip(&xt).enumerate() {
            let d = rp_distance(&ExtReal::from_f64(*x, prec), w);
            ratios.push((&d / &eps).to_f64());
            let lim = &eps.mul_rational(claimed[i].as_rational()) + &slack;
            if d > lim && violation.is_none() {
                violation = Some(format!(
                    "RP({}, x̃) = {:.6}ε exceeds the claimed {}ε",
                    vars[i], ratios[i], claimed[i]
                ));
            }
        }
        // Exactness condition.
        let lookup = |name: &str| vars.iter().position(|v| v == name).map(|k| xt[k].clone());
        let exact = match eval_real_ext(program, &lookup, cfg.sqrt_mode) {
            Ok(v) => v,
            Err(e) => {
                return fail(
                    format!("the program is undefined at the witness: {e}"),
                    ExtReal::infinity(prec),
                    ratios,
                )
            }
        };
        let residual = rp_distance(&exact, &ExtReal::from_f64(out, prec));
        if residual > cfg.residual_tolerance() {
            return fail(
                format!(
                    "f(x̃) = {exact} differs from f̃(x) = {out} (log₂ residual {:.1})",
                    log2_of(&residual)
                ),
                residual,
                ratios,
            );
        }
        return match violation {
            Some(detail) => fail(detail, residual, ratios),
            None => Outcome::Ok { residual, ratios },
        };
    }
    Outcome::Skipped
}

/// Certifies `claimed` bounds for `program` with an arbitrary witness
/// producer. Samples are independent and merged in index order.
pub fn certify_with(
    program: &Expr,
    vars: &[String],
    claimed: &[Bound],
    n_samples: u64,
    cfg: &EvalConfig,
    sampler: &Sampler,
    witness: &dyn WitnessFn,
) -> Result<StabilityReport, CertifyError> {
    if claimed.len() != vars.len() {
        return Err(CertifyError::Arity {
            claimed: claimed.len(),
            vars: vars.len(),
        });
    }
    let outcomes: Vec<Outcome> = (0..n_samples)
        .into_par_iter()
        .map(|i| one_sample(program, vars, claimed, cfg, sampler, i, witness))
        .collect();
    let mut report = StabilityReport {
        program: program.to_string(),
        claimed: vars.iter().cloned().zip(claimed.iter().cloned()).collect(),
        samples: n_samples,
        skipped: 0,
        max_ratio: vars.iter().map(|v| (v.clone(), 0.0)).collect(),
        max_residual_log2: f64::NEG_INFINITY,
        failures: 0,
        passed: false,
        counterexamples: Vec::new(),
    };
    let mut worst = ExtReal::zero(cfg.prec);
    let absorb = |ratios: &[f64], report: &mut StabilityReport| {
        for (v, r) in vars.iter().zip(ratios) {
            let slot = report.max_ratio.get_mut(v).expect("variable slot");
            *slot = slot.max(*r);
        }
    };
    for o in outcomes {
        match o {
            Outcome::Ok { residual, ratios } => {
                worst = worst.max(residual);
                absorb(&ratios, &mut report);
            }
            Outcome::Skipped => report.skipped += 1,
            Outcome::Fail(cx, residual, ratios) => {
                report.failures += 1;
                if residual.is_finite() {
                    worst = worst.max(residual);
                }
                absorb(&ratios, &mut report);
                if report.counterexamples.len() < KEEP {
                    report.counterexamples.push(cx);
                }
            }
        }
    }
    report.max_residual_log2 = log2_of(&worst);
    report.passed = report.failures == 0 && report.skipped == 0;
    Ok(report)
}

/// The witness producer of a lens whose source is one base per variable in
/// variable order: `x̃ = x * b(0)`.
pub fn lens_witness<'a>(lens: &'a LensSpec, cfg: &'a EvalConfig) -> impl WitnessFn + 'a {
    move |inputs: &[f64]| {
        let inst = match bind(lens, inputs, cfg) {
            Ok(i) => i,
            Err(LensError::Eval(_) | LensError::LogDomain { .. }) => return Err(WitnessFailure::Domain),
            Err(e) => return Err(WitnessFailure::Fail(e.to_string())),
        };
        let out = *inst
            .outputs()
            .first()
            .ok_or_else(|| WitnessFailure::Fail("the lens has no output".into()))?;
        let w = inst.witness().map_err(|e| WitnessFailure::Fail(e.to_string()))?;
        Ok((out, w))
    }
}

/// Certifies `claimed` bounds using the witness of `lens`.
pub fn certify_lens(
    program: &Expr,
    vars: &[String],
    lens: &LensSpec,
    claimed: &[Bound],
    n_samples: u64,
    cfg: &EvalConfig,
    sampler: &Sampler,
) -> Result<StabilityReport, CertifyError> {
    let w = lens_witness(lens, cfg);
    certify_with(program, vars, claimed, n_samples, cfg, sampler, &w)
}

/// Certifies a synthesized report: the derivation is compiled to a lens
/// whose source bounds must equal the report, and its witness is checked
/// against the program `e` (as given, before normalization).
pub fn certify(
    e: &Expr,
    report: &BoundReport,
    d: &Derivation,
    n_samples: u64,
    cfg: &EvalConfig,
    sampler: &Sampler,
) -> Result<StabilityReport, CertifyError> {
    let vars: Vec<String> = report.bounds.keys().cloned().collect();
    if vars != d.vars {
        return Err(CertifyError::VariableMismatch {
            derivation: d.vars.clone(),
            report: vars,
        });
    }
    let lens = derivation_to_lens(d)?;
    let claimed: Vec<Bound> = report.bounds.values().cloned().collect();
    if lens.source_bounds() != claimed {
        let show = |b: &[Bound]| b.iter().map(|x| x.to_string()).collect();
        return Err(CertifyError::BoundMismatch {
            lens: show(&lens.source_bounds()),
            report: show(&claimed),
        });
    }
    certify_lens(e, &vars, &lens, &claimed, n_samples, cfg, sampler)
}

/// Halves every claimed bound (for negative controls).
pub fn halved(claimed: &[Bound]) -> Vec<Bound> {
    claimed.iter().map(|b| b.half()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{parse_expr, unit_roundoff, Format};
    use crate::synth::{analyze, extract_derivation, EngineConfig};

    fn cfg() -> EvalConfig {
        EvalConfig::new(unit_roundoff(Format::Binary64))
    }

    #[test]
    fn synthesized_claims_certify() {
        let e = parse_expr("(Add x (Mul x y))").unwrap();
        let (db, reports) = analyze(&e, &EngineConfig::default()).unwrap();
        let d = extract_derivation(&db, &reports[0]);
        let r = certify(&e, &reports[0], &d, 300, &cfg(), &Sampler::with_seed(3)).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_ratio.values().all(|&x| x <= 1.0));
        assert!(r.max_residual_log2 <= -128.0);
    }

    #[test]
    fn halved_claims_are_refuted() {
        let e = parse_expr("(Sqrt (Add (Mul a a) (Mul b b)))").unwrap();
        let (db, reports) = analyze(&e, &EngineConfig::default()).unwrap();
        let d = extract_derivation(&db, &reports[0]);
        let lens = derivation_to_lens(&d).unwrap();
        let claimed: Vec<Bound> = reports[0].bounds.values().cloned().collect();
        let r = certify_lens(
            &e,
            &d.vars,
            &lens,
            &halved(&claimed),
            300,
            &cfg(),
            &Sampler::with_seed(5),
        )
        .unwrap();
        assert!(!r.passed);
        assert!(!r.counterexamples.is_empty());
    }

    #[test]
    fn a_wrong_witness_is_caught() {
        let e = parse_expr("(Mul a b)").unwrap();
        let vars = vec!["a".to_string(), "b".to_string()];
        let lying = |x: &[f64]| {
            let out = x[0] * x[1];
            Ok((out, x.iter().map(|&v| ExtReal::from_f64(v, 256)).collect()))
        };
        let claimed = vec![Bound::from_int(1), Bound::from_int(1)];
        let r = certify_with(&e, &vars, &claimed, 200, &cfg(), &Sampler::with_seed(1), &lying).unwrap();
        // Unperturbed inputs only witness the exactly representable products.
        assert!(!r.passed);
    }

    #[test]
    fn mismatched_reports_are_rejected() {
        let e = parse_expr("(Add x (Mul x y))").unwrap();
        let (db, reports) = analyze(&e, &EngineConfig::default()).unwrap();
        let mut d = extract_derivation(&db, &reports[0]);
        d.vars.reverse();
        assert!(matches!(
            certify(&e, &reports[0], &d, 10, &cfg(), &Sampler::default()),
            Err(CertifyError::VariableMismatch { .. })
        ));
    }
}
