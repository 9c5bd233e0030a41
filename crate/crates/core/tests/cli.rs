//! End-to-end tests of the `shel` binary: exit codes, JSON output and
//! environment handling.

use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn shel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shel"))
        .args(args)
        .env_remove("SHEL_PRECISION")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn analyze_json_has_the_documented_schema() {
    let o = shel(&["analyze", "--json", "(Mul (Sqrt a) (Sqrt b))"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["version"], 1);
    assert_eq!(v["program"], "(Mul (Sqrt a) (Sqrt b))");
    assert_eq!(v["status"], "bounds-found");
    assert!(v["time_ms"].is_u64());
    let stats = &v["stats"];
    assert!(stats["facts"].as_u64().unwrap() > 0);
    assert!(stats["iterations"].as_u64().unwrap() > 0);
    assert_eq!(stats["saturated"], true);
    let reports = v["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["smallest_max"], true);
    assert_eq!(reports[0]["bounds"]["a"], "3");
    assert_eq!(reports[0]["bounds"]["b"], "3");
}

#[test]
fn bounds_are_exact_rational_strings() {
    let v = json(&shel(&["analyze", "--json", "(Mul (Add a b) (Add b a))"]));
    assert_eq!(v["reports"][0]["bounds"]["a"], "3/2");
    assert_eq!(v["reports"][0]["bounds"]["b"], "3/2");
}

#[test]
fn a_bare_variable_is_exact() {
    let v = json(&shel(&["analyze", "--json", "a"]));
    assert_eq!(v["status"], "bounds-found");
    assert_eq!(v["reports"][0]["bounds"]["a"], "0");
}

#[test]
fn all_bounds_marks_exactly_one_smallest_max() {
    let v = json(&shel(&["analyze", "--json", "--all-bounds", "(Add x (Mul x y))"]));
    let reports = v["reports"].as_array().unwrap();
    assert!(!reports.is_empty());
    assert_eq!(reports.iter().filter(|r| r["smallest_max"] == true).count(), 1);
    assert_eq!(reports[0]["smallest_max"], true);
}

#[test]
fn derivations_are_included_on_request() {
    let v = json(&shel(&["analyze", "--json", "--derivation", "(Add a b)"]));
    let steps = v["reports"][0]["derivation"]["steps"].as_array().unwrap();
    assert!(!steps.is_empty());
    let plain = json(&shel(&["analyze", "--json", "(Add a b)"]));
    assert!(plain["reports"][0].get("derivation").is_none());
}

#[test]
fn parse_errors_exit_with_2() {
    for bad in ["(Add a", "(Add a b c)", "()", "(Add 1 a)"] {
        let o = shel(&["analyze", bad]);
        assert_eq!(code(&o), 2, "{bad}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("parse error"), "{bad}");
    }
}

#[test]
fn unknown_operators_exit_with_3() {
    let o = shel(&["analyze", "(Exp a)"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Exp"));
}

#[test]
fn operators_without_rules_exit_with_3() {
    for prog in ["(Sub a b)", "(Div a b)"] {
        assert_eq!(code(&shel(&["analyze", prog])), 3, "{prog}");
    }
    let o = shel(&["analyze", "--json", "--rules", "all", "(Sub a b)"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["status"], "bounds-found");
}

#[test]
fn none_found_exits_with_0() {
    let o = shel(&["analyze", "--json", "--bound-cap", "0", "(Add a b)"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["status"], "none-found");
    assert_eq!(v["reports"].as_array().unwrap().len(), 0);
}

#[test]
fn resource_limits_report_capped() {
    let v = json(&shel(&["analyze", "--json", "--max-iters", "1", "(Add x (Mul x y))"]));
    assert_eq!(v["status"], "capped");
    assert_eq!(v["stats"]["saturated"], false);
}

#[test]
fn programs_are_read_from_files_and_stdin() {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    writeln!(f, "(Add a b)").unwrap();
    let v = json(&shel(&["analyze", "--json", f.path().to_str().unwrap()]));
    assert_eq!(v["program"], "(Add a b)");

    let mut child = Command::new(env!("CARGO_BIN_EXE_shel"))
        .args(["analyze", "--json", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(b"(Mul a b)").unwrap();
    let o = child.wait_with_output().unwrap();
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["program"], "(Mul a b)");
}

#[test]
fn missing_files_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.shel");
    // A nonexistent path is taken as literal program text, which fails to parse.
    assert_eq!(code(&shel(&["analyze", missing.to_str().unwrap()])), 2);
}

#[test]
fn precision_comes_from_the_environment() {
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_shel"));
        c.env_remove("SHEL_PRECISION");
        if let Some(p) = env {
            c.env("SHEL_PRECISION", p);
        }
        c.args(["certify", "--json", "--samples", "20", "--positive"])
            .args(extra)
            .arg("(Mul (Sqrt a) b)")
            .output()
            .unwrap()
    };
    assert_eq!(json(&run(None, &[]))["precision"], 256);
    let o = run(Some("512"), &[]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["precision"], 512);
    assert_eq!(json(&run(Some("512"), &["--precision", "128"]))["precision"], 128);
    assert_eq!(code(&run(Some("12"), &[])), 2);
    assert_eq!(code(&run(Some("many"), &[])), 2);
}

#[test]
fn certify_reports_passing_certificates() {
    let o = shel(&[
        "certify",
        "--json",
        "--samples",
        "50",
        "--all-bounds",
        "(Add x (Mul x y))",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["passed"], true);
    let certs = v["certificates"].as_array().unwrap();
    assert!(!certs.is_empty());
    assert!(certs.iter().all(|c| c["passed"] == true && c["failures"] == 0));
}

#[test]
fn lenscheck_passes_on_the_catalog() {
    let o = shel(&["lenscheck", "--json", "--samples", "30", "--only", "mul"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["passed"], true);
    let lenses = v["lenses"].as_array().unwrap();
    assert!(!lenses.is_empty());
    assert!(lenses.iter().all(|l| l["name"].as_str().unwrap().contains("mul")));
}

#[test]
fn bench_table2_matches_every_expected_vector() {
    let o = shel(&["bench", "table2", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let v = json(&o);
    let rows = v.as_array().or_else(|| v["rows"].as_array()).expect("rows");
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r["outcome"] == "pass"), "{v:#}");
}

#[test]
fn text_output_marks_the_smallest_max_vector() {
    let o = shel(&["analyze", "(Mul (Sqrt a) (Sqrt b))"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("status:  bounds-found"), "{text}");
    assert!(text.contains("* a: 3  b: 3"), "{text}");
}
