//! `shel analyze`: seed, saturate and query one program.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{io_err, load_program, write_json, AnalyzeArgs, Cli, CliError, SCHEMA_VERSION};
use crate::contexts::Bound;
use crate::numerics::Expr;
use crate::synth::{analyze, extract_derivation, BoundReport, Database, EngineConfig, EngineError, Stats};

/// Outcome of a synthesis run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Saturated with at least one bound vector.
    BoundsFound,
    /// Saturated without reaching any start context.
    NoneFound,
    /// Stopped by a resource limit; any reported bounds are sound but the
    /// smallest may be missing.
    Capped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::BoundsFound => "bounds-found",
            Status::NoneFound => "none-found",
            Status::Capped => "capped",
        }
    }
}

/// One bound vector in the output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOut {
    /// Bound per variable in ε units, as exact rationals.
    pub bounds: IndexMap<String, Bound>,
    pub smallest_max: bool,
    /// The derivation behind the bounds (`--derivation`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derivation: Option<serde_json::Value>,
}

impl ReportOut {
    pub fn max(&self) -> Bound {
        self.bounds.values().cloned().fold(Bound::zero(), Bound::max)
    }
}

/// The machine-readable result of `shel analyze`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOutput {
    pub version: u32,
    pub program: String,
    pub status: Status,
    pub reports: Vec<ReportOut>,
    pub stats: Stats,
    pub time_ms: u64,
}

impl AnalysisOutput {
    /// The smallest-max report, if any bound was found.
    pub fn best(&self) -> Option<&ReportOut> {
        self.reports.iter().find(|r| r.smallest_max)
    }
}

/// Runs the engine on `e`. With `all_bounds` every Pareto-minimal vector is
/// kept, otherwise only the smallest-max one.
pub fn analyze_program(
    e: &Expr,
    cfg: &EngineConfig,
    all_bounds: bool,
    with_derivations: bool,
) -> Result<AnalysisOutput, EngineError> {
    let start = Instant::now();
    let (db, reports) = analyze(e, cfg)?;
    let time_ms = start.elapsed().as_millis() as u64;
    Ok(build_output(e, &db, &reports, time_ms, all_bounds, with_derivations))
}

/// The status of a finished run.
pub fn status_of(stats: &Stats, reports: &[BoundReport]) -> Status {
    match (stats.saturated, reports.is_empty()) {
        (false, _) => Status::Capped,
        (true, true) => Status::NoneFound,
        (true, false) => Status::BoundsFound,
    }
}

/// Packages a finished run as an [`AnalysisOutput`].
pub fn build_output(
    e: &Expr,
    db: &Database,
    reports: &[BoundReport],
    time_ms: u64,
    all_bounds: bool,
    with_derivations: bool,
) -> AnalysisOutput {
    let stats = db.stats();
    let reports_out = reports
        .iter()
        .filter(|r| all_bounds || r.smallest_max)
        .map(|r| ReportOut {
            bounds: r.bounds.clone(),
            smallest_max: r.smallest_max,
            derivation: with_derivations.then(|| extract_derivation(db, r).to_json()),
        })
        .collect();
    AnalysisOutput {
        version: SCHEMA_VERSION,
        program: e.to_string(),
        status: status_of(&stats, reports),
        reports: reports_out,
        stats,
        time_ms,
    }
}

/// Renders bounds as `a: 2  b: 3/2`.
pub fn format_bounds(bounds: &IndexMap<String, Bound>) -> String {
    let parts: Vec<String> = bounds.iter().map(|(v, b)| format!("{v}: {b}")).collect();
    parts.join("  ")
}

/// The human-readable form of an analysis.
pub fn render_text(o: &AnalysisOutput) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "program: {}", o.program);
    let _ = writeln!(s, "status:  {}", o.status.as_str());
    if !o.reports.is_empty() {
        let _ = writeln!(s, "bounds (units of ε):");
        for r in &o.reports {
            let mark = if r.smallest_max { "*" } else { " " };
            let _ = writeln!(s, "  {mark} {}    (max {})", format_bounds(&r.bounds), r.max());
            if let Some(d) = &r.derivation {
                for step in d["steps"].as_array().into_iter().flatten() {
                    let _ = writeln!(
                        s,
                        "      {:<16} {}  =>  {}",
                        step["rule"].as_str().unwrap_or(""),
                        step["src"].as_str().unwrap_or(""),
                        step["dst"].as_str().unwrap_or("")
                    );
                }
            }
        }
    }
    let _ = writeln!(
        s,
        "stats:   {} facts, {} iterations, {}",
        o.stats.facts,
        o.stats.iterations,
        if o.stats.saturated {
            "saturated"
        } else {
            "not saturated"
        }
    );
    let _ = writeln!(s, "time:    {} ms", o.time_ms);
    s
}

pub(super) fn cmd_analyze(_cli: &Cli, a: &AnalyzeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let e = load_program(&a.input)?;
    let o = analyze_program(&e, &a.engine.config(), a.all_bounds, a.derivation)?;
    if a.json {
        write_json(out, &o)?;
    } else {
        out.write_all(render_text(&o).as_bytes()).map_err(io_err)?;
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::parse_expr;

    fn run(s: &str, all: bool) -> AnalysisOutput {
        analyze_program(&parse_expr(s).unwrap(), &EngineConfig::default(), all, false).unwrap()
    }

    #[test]
    fn identity_program_has_zero_bound() {
        let o = run("a", false);
        assert_eq!(o.status, Status::BoundsFound);
        assert_eq!(o.best().unwrap().bounds["a"], Bound::zero());
    }

    #[test]
    fn sqrt_product_bound() {
        let o = run("(Mul (Sqrt a) (Sqrt b))", true);
        assert_eq!(o.best().unwrap().max(), Bound::from_int(3));
        assert!(o.reports.iter().filter(|r| r.smallest_max).count() == 1);
    }

    #[test]
    fn json_round_trips_with_rational_strings() {
        let o = run("(Mul (Add a b) (Add b a))", false);
        let text = serde_json::to_string(&o).unwrap();
        assert!(text.contains(r#""a":"3/2""#), "{text}");
        assert!(text.contains(r#""status":"bounds-found""#));
        let back: AnalysisOutput = serde_json::from_str(&text).unwrap();
        assert_eq!(back, o);
    }

    #[test]
    fn capped_runs_are_reported() {
        let cfg = EngineConfig {
            max_iterations: 1,
            ..EngineConfig::default()
        };
        let o = analyze_program(&parse_expr("(Add x (Mul x y))").unwrap(), &cfg, false, false).unwrap();
        assert_eq!(o.status, Status::Capped);
        assert!(!o.stats.saturated);
    }

    #[test]
    fn text_marks_smallest_max() {
        let o = run("(Add x (Mul x y))", false);
        let t = render_text(&o);
        assert!(t.contains("* x: 1  y: 1"), "{t}");
    }
}
