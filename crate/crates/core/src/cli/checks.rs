//! `shel certify` and `shel lenscheck`: sampled numerical checks.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::analyze::{format_bounds, status_of, Status};
use super::{eval_config, io_err, load_program, write_json, CertifyArgs, Cli, CliError, LenscheckArgs};
use super::{EXIT_CHECK_FAILED, SCHEMA_VERSION};
use crate::lenses::{catalog_suite, check_conditions, ConditionReport, EvalConfig};
use crate::numerics::sample::Sampler;
use crate::numerics::Expr;
use crate::synth::{analyze, extract_derivation, EngineConfig};
use crate::validate::{certify, StabilityReport};

/// The result of `shel certify`.
#[derive(Clone, Debug, Serialize)]
pub struct CertifyOutput {
    pub version: u32,
    pub program: String,
    pub status: Status,
    pub precision: u32,
    pub certificates: Vec<StabilityReport>,
    pub passed: bool,
    pub time_ms: u64,
}

/// Synthesizes bounds for `e` and certifies the smallest-max vector (or
/// all of them) on `samples` random inputs.
pub fn certify_program(
    e: &Expr,
    engine: &EngineConfig,
    all_bounds: bool,
    samples: u64,
    cfg: &EvalConfig,
    sampler: &Sampler,
) -> Result<CertifyOutput, CliError> {
    let start = Instant::now();
    let (db, reports) = analyze(e, engine)?;
    let status = status_of(&db.stats(), &reports);
    let mut certificates = Vec::new();
    for r in reports.iter().filter(|r| all_bounds || r.smallest_max) {
        let d = extract_derivation(&db, r);
        let rep = certify(e, r, &d, samples, cfg, sampler).map_err(|err| CliError::Other(err.to_string()))?;
        certificates.push(rep);
    }
    Ok(CertifyOutput {
        version: SCHEMA_VERSION,
        program: e.to_string(),
        status,
        precision: cfg.prec,
        passed: certificates.iter().all(|c| c.passed),
        certificates,
        time_ms: start.elapsed().as_millis() as u64,
    })
}

fn render_certify(o: &CertifyOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "program: {}", o.program);
    let _ = writeln!(s, "status:  {}", o.status.as_str());
    for c in &o.certificates {
        let _ = writeln!(s, "claim:   {}", format_bounds(&c.claimed));
        let ratios: Vec<String> = c.max_ratio.iter().map(|(v, r)| format!("{v}: {r:.4}")).collect();
        let _ = writeln!(s, "  observed max RP/ε: {}", ratios.join("  "));
        let _ = writeln!(s, "  max residual: 2^{:.1}", c.max_residual_log2);
        let _ = writeln!(
            s,
            "  {} samples, {} skipped, {} failures: {}",
            c.samples,
            c.skipped,
            c.failures,
            if c.passed { "certified" } else { "REFUTED" }
        );
        for ce in &c.counterexamples {
            let _ = writeln!(s, "    sample {} at {:?}: {}", ce.sample, ce.inputs, ce.detail);
        }
    }
    let _ = writeln!(s, "time:    {} ms", o.time_ms);
    s
}

pub(super) fn cmd_certify(cli: &Cli, a: &CertifyArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let e = load_program(&a.input)?;
    let mut sampler = Sampler::with_seed(a.seed);
    if a.positive {
        sampler = sampler.positive();
    }
    let o = certify_program(
        &e,
        &a.engine.config(),
        a.all_bounds,
        a.samples,
        &eval_config(cli),
        &sampler,
    )?;
    if a.json {
        write_json(out, &o)?;
    } else {
        out.write_all(render_certify(&o).as_bytes()).map_err(io_err)?;
    }
    Ok(if o.passed { 0 } else { EXIT_CHECK_FAILED })
}

/// Checks every catalog lens whose name contains `only` (all if `None`).
pub fn lenscheck(samples: u64, seed: u64, only: Option<&str>, cfg: &EvalConfig) -> Vec<(String, ConditionReport)> {
    let entries: Vec<_> = catalog_suite(&cfg.model, seed)
        .into_iter()
        .filter(|e| only.is_none_or(|o| e.name.contains(o)))
        .collect();
    entries
        .par_iter()
        .map(|e| (e.name.clone(), check_conditions(&e.lens, samples, cfg, &e.sampler)))
        .collect()
}

#[derive(Serialize)]
struct LensRow<'a> {
    name: &'a str,
    passed: bool,
    #[serde(flatten)]
    report: &'a ConditionReport,
}

#[derive(Serialize)]
struct LenscheckOutput<'a> {
    version: u32,
    precision: u32,
    lenses: Vec<LensRow<'a>>,
    passed: bool,
}

pub(super) fn cmd_lenscheck(cli: &Cli, a: &LenscheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = eval_config(cli);
    let results = lenscheck(a.samples, a.seed, a.only.as_deref(), &cfg);
    let passed = results.iter().all(|(_, r)| r.passed());
    if a.json {
        let lenses = results
            .iter()
            .map(|(name, report)| LensRow {
                name,
                passed: report.passed(),
                report,
            })
            .collect();
        write_json(
            out,
            &LenscheckOutput {
                version: SCHEMA_VERSION,
                precision: cfg.prec,
                lenses,
                passed,
            },
        )?;
    } else {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<26} {:>7} {:>7} {:>8} {:>10} {:>10}  result",
            "lens", "samples", "skipped", "failures", "max |b|/pε", "residual"
        );
        for (name, r) in &results {
            let _ = writeln!(
                s,
                "{:<26} {:>7} {:>7} {:>8} {:>10.4} {:>10}  {}",
                name,
                r.samples,
                r.skipped,
                r.failures,
                r.max_norm_ratio,
                format!("2^{:.0}", r.max_residual_log2),
                if r.passed() { "pass" } else { "FAIL" }
            );
        }
        let n_pass = results.iter().filter(|(_, r)| r.passed()).count();
        let _ = writeln!(s, "{n_pass}/{} lenses passed", results.len());
        out.write_all(s.as_bytes()).map_err(io_err)?;
    }
    Ok(if passed { 0 } else { EXIT_CHECK_FAILED })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{parse_expr, unit_roundoff, Format};

    #[test]
    fn certifies_synthesized_bounds() {
        let cfg = EvalConfig::new(unit_roundoff(Format::Binary64));
        let e = parse_expr("(Add a (Sqrt (Mul a b)))").unwrap();
        let o = certify_program(
            &e,
            &EngineConfig::default(),
            true,
            100,
            &cfg,
            &Sampler::with_seed(3).positive(),
        )
        .unwrap();
        assert_eq!(o.status, Status::BoundsFound);
        assert!(!o.certificates.is_empty());
        assert!(o.passed, "{o:?}");
    }

    #[test]
    fn lenscheck_filters_by_name() {
        let cfg = EvalConfig::new(unit_roundoff(Format::Binary64));
        let rows = lenscheck(50, 1, Some("dmul"), &cfg);
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|(n, r)| n.starts_with("dmul") && r.passed()));
    }
}
