//! The C ABI exercised from Rust through the exported symbols.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use shel_ffi::*;

fn take_string(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { shel_string_free(s) };
    out
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(shel_last_error()) }
        .to_str()
        .unwrap()
        .to_string()
}

fn parse(text: &str) -> Result<*mut ShelProgram, ShelStatus> {
    let c = CString::new(text).unwrap();
    let mut p = ptr::null_mut();
    match unsafe { shel_program_parse(c.as_ptr(), &mut p) } {
        ShelStatus::Ok => Ok(p),
        s => Err(s),
    }
}

fn analyze(text: &str) -> *mut ShelAnalysis {
    let p = parse(text).unwrap();
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { shel_analyze(p, ptr::null(), &mut a) }, ShelStatus::Ok);
    unsafe { shel_program_free(p) };
    a
}

fn bound(a: *const ShelAnalysis, report: usize, var: usize) -> (u64, u64) {
    let (mut n, mut d) = (0, 0);
    assert_eq!(
        unsafe { shel_analysis_bound(a, report, var, &mut n, &mut d) },
        ShelStatus::Ok
    );
    (n, d)
}

#[test]
fn program_round_trip() {
    let p = parse("( Add  x (Mul x y) )").unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { shel_program_to_string(p, &mut s) }, ShelStatus::Ok);
    assert_eq!(take_string(s), "(Add x (Mul x y))");
    unsafe { shel_program_free(p) };
}

#[test]
fn parse_errors_are_reported() {
    assert_eq!(parse("(Add x").unwrap_err(), ShelStatus::ParseError);
    assert!(last_error().contains("unexpected end of input"), "{}", last_error());
    assert_eq!(parse("(Exp x)").unwrap_err(), ShelStatus::Unsupported);
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { shel_program_parse(ptr::null(), &mut p) },
        ShelStatus::NullArgument
    );
    let bad = [0xffu8 as c_char, 0];
    assert_eq!(
        unsafe { shel_program_parse(bad.as_ptr(), &mut p) },
        ShelStatus::InvalidUtf8
    );
}

#[test]
fn unsupported_operator_in_analysis() {
    let p = parse("(Sub a b)").unwrap();
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { shel_analyze(p, ptr::null(), &mut a) }, ShelStatus::Unsupported);
    assert!(a.is_null());
    assert!(last_error().contains("Sub"));
    unsafe { shel_program_free(p) };
}

#[test]
fn bounds_of_a_squared_sum() {
    let a = analyze("(Mul (Add a b) (Add b a))");
    let mut st = ShelAnalysisStatus::Capped;
    assert_eq!(unsafe { shel_analysis_status(a, &mut st) }, ShelStatus::Ok);
    assert_eq!(st, ShelAnalysisStatus::BoundsFound);
    assert_eq!(unsafe { shel_analysis_var_count(a) }, 2);
    let mut best = usize::MAX;
    assert_eq!(unsafe { shel_analysis_smallest_max(a, &mut best) }, ShelStatus::Ok);
    assert_eq!(bound(a, best, 0), (3, 2));
    assert_eq!(bound(a, best, 1), (3, 2));
    let mut name = ptr::null_mut();
    assert_eq!(unsafe { shel_analysis_var_name(a, 1, &mut name) }, ShelStatus::Ok);
    assert_eq!(take_string(name), "b");
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { shel_analysis_bound_string(a, best, 0, &mut s) },
        ShelStatus::Ok
    );
    assert_eq!(take_string(s), "3/2");
    unsafe { shel_analysis_free(a) };
}

#[test]
fn out_of_range_indices() {
    let a = analyze("(Add x (Mul x y))");
    let n = unsafe { shel_analysis_report_count(a) };
    let (mut num, mut den) = (0, 0);
    assert_eq!(
        unsafe { shel_analysis_bound(a, n, 0, &mut num, &mut den) },
        ShelStatus::OutOfRange
    );
    assert_eq!(
        unsafe { shel_analysis_bound(a, 0, 2, &mut num, &mut den) },
        ShelStatus::OutOfRange
    );
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { shel_analysis_var_name(a, 9, &mut s) }, ShelStatus::OutOfRange);
    assert!(s.is_null());
    unsafe { shel_analysis_free(a) };
}

#[test]
fn json_matches_cli_schema() {
    let a = analyze("(Mul (Sqrt a) (Sqrt b))");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { shel_analysis_to_json(a, false, &mut s) }, ShelStatus::Ok);
    let v: serde_json::Value = serde_json::from_str(&take_string(s)).unwrap();
    assert_eq!(v["version"], 1);
    assert_eq!(v["program"], "(Mul (Sqrt a) (Sqrt b))");
    assert_eq!(v["status"], "bounds-found");
    assert_eq!(v["reports"][0]["bounds"]["a"], "3");
    assert_eq!(v["reports"][0]["smallest_max"], true);
    assert_eq!(v["stats"]["saturated"], true);
    unsafe { shel_analysis_free(a) };
}

#[test]
fn engine_limits_cap_the_search() {
    let p = parse("(Add x (Mul x y))").unwrap();
    let mut o = ShelEngineOptions {
        max_iterations: 0,
        max_facts: 0,
        bound_cap_num: 0,
        bound_cap_den: 0,
        timeout_seconds: 0.0,
    };
    assert_eq!(unsafe { shel_engine_options_default(&mut o) }, ShelStatus::Ok);
    assert_eq!((o.bound_cap_num, o.bound_cap_den), (64, 1));
    o.max_iterations = 1;
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { shel_analyze(p, &o, &mut a) }, ShelStatus::Ok);
    let mut st = ShelAnalysisStatus::BoundsFound;
    unsafe { shel_analysis_status(a, &mut st) };
    assert_eq!(st, ShelAnalysisStatus::Capped);
    unsafe { shel_analysis_free(a) };
    o.bound_cap_den = 0;
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { shel_analyze(p, &o, &mut a) }, ShelStatus::InvalidArgument);
    unsafe { shel_program_free(p) };
}

#[test]
fn derivation_text() {
    let a = analyze("(Sqrt a)");
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { shel_analysis_derivation(a, 0, &mut s) }, ShelStatus::Ok);
    assert!(take_string(s).starts_with("(derivation (Sqrt a)"));
    unsafe { shel_analysis_free(a) };
}

#[test]
fn certification_through_the_abi() {
    let a = analyze("(Add a (Mul a (Sqrt b)))");
    let mut o = ShelCertifyOptions {
        samples: 0,
        seed: 0,
        positive_inputs: false,
        precision: 0,
    };
    assert_eq!(unsafe { shel_certify_options_default(&mut o) }, ShelStatus::Ok);
    o.samples = 200;
    o.positive_inputs = true;
    let mut best = 0;
    unsafe { shel_analysis_smallest_max(a, &mut best) };
    let mut sum = ShelCertifySummary::default();
    assert_eq!(unsafe { shel_certify(a, best, &o, &mut sum) }, ShelStatus::Ok);
    assert!(sum.passed, "{sum:?}");
    assert_eq!(sum.samples, 200);
    assert_eq!(sum.failures, 0);
    assert!(sum.max_ratio <= 4.0 + 1e-9);
    assert!(sum.max_residual_log2 <= -128.0);
    o.precision = 8;
    assert_eq!(
        unsafe { shel_certify(a, best, &o, &mut sum) },
        ShelStatus::InvalidArgument
    );
    unsafe { shel_analysis_free(a) };
}

#[test]
fn null_handles_are_rejected() {
    let mut st = ShelAnalysisStatus::BoundsFound;
    assert_eq!(
        unsafe { shel_analysis_status(ptr::null(), &mut st) },
        ShelStatus::NullArgument
    );
    assert_eq!(unsafe { shel_analysis_report_count(ptr::null()) }, 0);
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { shel_program_to_string(ptr::null(), &mut s) },
        ShelStatus::NullArgument
    );
    unsafe {
        shel_program_free(ptr::null_mut());
        shel_analysis_free(ptr::null_mut());
        shel_string_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(shel_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
