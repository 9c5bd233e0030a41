//! C ABI for the `shel` backward error analyzer.
//!
//! Conventions:
//! - Objects are opaque handles created by `shel_program_parse` and
//!   `shel_analyze`, released with the matching `shel_*_free`.
//! - Fallible functions return a [`ShelStatus`]; on failure a description is
//!   available from [`shel_last_error`] on the same thread.
//! - Strings returned through `char **` out-parameters are owned by the
//!   caller and must be released with [`shel_string_free`].
//! - No function unwinds across the boundary; internal panics are reported
//!   as [`ShelStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use shel::cli::{build_output, status_of, Status};
use shel::contexts::Bound;
use shel::lenses::EvalConfig;
use shel::numerics::sample::Sampler;
use shel::numerics::{parse_expr, unit_roundoff, Expr, Format, ParseError, DEFAULT_PRECISION};
use shel::synth::{analyze, extract_derivation, BoundReport, Database, EngineConfig, EngineError};
use shel::validate::certify;

/// Result codes of fallible calls.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShelStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The program text is not a well-formed expression.
    ParseError = 3,
    /// The program uses an operator the synthesis rules do not support.
    Unsupported = 4,
    /// A report or variable index is out of range.
    OutOfRange = 5,
    /// A value does not fit the requested representation.
    Overflow = 6,
    /// A numerical check could not be run.
    CertifyError = 7,
    /// An invalid option value.
    InvalidArgument = 8,
    /// An internal error; the handle arguments are left unchanged.
    Panic = 99,
}

/// Outcome of an analysis (mirrors the CLI `status` field).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShelAnalysisStatus {
    BoundsFound = 0,
    NoneFound = 1,
    Capped = 2,
}

/// Resource limits for [`shel_analyze`]. Obtain defaults from
/// [`shel_engine_options_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShelEngineOptions {
    pub max_iterations: u64,
    pub max_facts: u64,
    /// Bound cap numerator/denominator (ε units).
    pub bound_cap_num: u64,
    pub bound_cap_den: u64,
    /// Wall-clock limit in seconds; zero, negative or infinite means none.
    pub timeout_seconds: f64,
}

/// Numerical certification settings for [`shel_certify`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct ShelCertifyOptions {
    pub samples: u64,
    pub seed: u64,
    /// Draw only positive inputs.
    pub positive_inputs: bool,
    /// Oracle precision in bits (0 selects the default).
    pub precision: u32,
}

/// Summary of a certification run.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct ShelCertifySummary {
    pub passed: bool,
    pub samples: u64,
    pub skipped: u64,
    pub failures: u64,
    /// log₂ of the largest exactness residual (−∞ if every sample was exact).
    pub max_residual_log2: f64,
    /// Largest observed `RP(xᵢ, x̃ᵢ)/ε` over all variables.
    pub max_ratio: f64,
}

/// A parsed program.
pub struct ShelProgram {
    expr: Expr,
}

/// A finished analysis: the saturated database and its bound reports.
pub struct ShelAnalysis {
    program: Expr,
    db: Database,
    reports: Vec<BoundReport>,
    time_ms: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: ShelStatus, msg: impl Into<String>) -> ShelStatus {
    set_error(msg);
    status
}

/// Runs `f`, converting a panic into [`ShelStatus::Panic`].
fn guard(f: impl FnOnce() -> ShelStatus) -> ShelStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".to_string());
            fail(ShelStatus::Panic, msg)
        }
    }
}

/// # Safety
/// `s` must be NULL or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, ShelStatus> {
    if s.is_null() {
        return Err(fail(ShelStatus::NullArgument, "string argument is NULL"));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| fail(ShelStatus::InvalidUtf8, "string argument is not valid UTF-8"))
}

/// # Safety
/// `out` must be NULL or valid for writes.
unsafe fn write_string(out: *mut *mut c_char, s: String) -> ShelStatus {
    if out.is_null() {
        return fail(ShelStatus::NullArgument, "output pointer is NULL");
    }
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            ShelStatus::Ok
        }
        Err(_) => fail(ShelStatus::InvalidArgument, "string contains an interior NUL"),
    }
}

/// The description of the last failure on this thread ("" if none). The
/// pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn shel_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// The library version as a static string.
#[no_mangle]
pub extern "C" fn shel_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string returned by this library that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn shel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses an s-expression such as `(Add x (Mul x y))`.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_program_parse(text: *const c_char, out: *mut *mut ShelProgram) -> ShelStatus {
    guard(|| {
        if out.is_null() {
            return fail(ShelStatus::NullArgument, "output pointer is NULL");
        }
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_expr(text) {
            Ok(expr) => {
                *out = Box::into_raw(Box::new(ShelProgram { expr }));
                ShelStatus::Ok
            }
            Err(e @ ParseError::UnknownOperator { .. }) => fail(ShelStatus::Unsupported, e.to_string()),
            Err(e) => fail(ShelStatus::ParseError, e.to_string()),
        }
    })
}

/// Prints a program in canonical s-expression form.
///
/// # Safety
/// `p` must be a live program handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_program_to_string(p: *const ShelProgram, out: *mut *mut c_char) -> ShelStatus {
    guard(|| match p.as_ref() {
        Some(p) => write_string(out, p.expr.to_string()),
        None => fail(ShelStatus::NullArgument, "program handle is NULL"),
    })
}

/// Releases a program. NULL is ignored.
///
/// # Safety
/// `p` must be NULL or a program handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn shel_program_free(p: *mut ShelProgram) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Fills `out` with the default engine limits.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_engine_options_default(out: *mut ShelEngineOptions) -> ShelStatus {
    let Some(out) = out.as_mut() else {
        return fail(ShelStatus::NullArgument, "output pointer is NULL");
    };
    let d = EngineConfig::default();
    *out = ShelEngineOptions {
        max_iterations: d.max_iterations as u64,
        max_facts: d.max_facts as u64,
        bound_cap_num: d.bound_cap.as_rational().numer().to_u64().unwrap_or(u64::MAX),
        bound_cap_den: d.bound_cap.as_rational().denom().to_u64().unwrap_or(1),
        timeout_seconds: 0.0,
    };
    ShelStatus::Ok
}

fn engine_config(o: &ShelEngineOptions) -> Result<EngineConfig, ShelStatus> {
    if o.bound_cap_den == 0 {
        return Err(fail(ShelStatus::InvalidArgument, "bound cap denominator is zero"));
    }
    if o.timeout_seconds.is_nan() {
        return Err(fail(ShelStatus::InvalidArgument, "timeout is NaN"));
    }
    Ok(EngineConfig {
        max_iterations: usize::try_from(o.max_iterations).unwrap_or(usize::MAX),
        max_facts: usize::try_from(o.max_facts).unwrap_or(usize::MAX),
        bound_cap: Bound::ratio(o.bound_cap_num, o.bound_cap_den),
        timeout: (o.timeout_seconds > 0.0 && o.timeout_seconds.is_finite())
            .then(|| Duration::from_secs_f64(o.timeout_seconds)),
        ..EngineConfig::default()
    })
}

/// Synthesizes backward error bounds for `p`. `opts` may be NULL for the
/// defaults. On success `*out` receives a new analysis handle.
///
/// # Safety
/// `p` must be a live program handle, `opts` NULL or valid for reads, and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analyze(
    p: *const ShelProgram,
    opts: *const ShelEngineOptions,
    out: *mut *mut ShelAnalysis,
) -> ShelStatus {
    guard(|| {
        let Some(p) = p.as_ref() else {
            return fail(ShelStatus::NullArgument, "program handle is NULL");
        };
        if out.is_null() {
            return fail(ShelStatus::NullArgument, "output pointer is NULL");
        }
        let cfg = match opts.as_ref().map(engine_config) {
            None => EngineConfig::default(),
            Some(Ok(c)) => c,
            Some(Err(s)) => return s,
        };
        let start = Instant::now();
        match analyze(&p.expr, &cfg) {
            Ok((db, reports)) => {
                *out = Box::into_raw(Box::new(ShelAnalysis {
                    program: p.expr.clone(),
                    db,
                    reports,
                    time_ms: start.elapsed().as_millis() as u64,
                }));
                ShelStatus::Ok
            }
            Err(e @ EngineError::UnsupportedOperator { .. }) => fail(ShelStatus::Unsupported, e.to_string()),
        }
    })
}

/// Releases an analysis. NULL is ignored.
///
/// # Safety
/// `a` must be NULL or an analysis handle that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_free(a: *mut ShelAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}

/// Whether bounds were found, none exist, or a limit stopped the search.
///
/// # Safety
/// `a` must be a live analysis handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_status(a: *const ShelAnalysis, out: *mut ShelAnalysisStatus) -> ShelStatus {
    let (Some(a), Some(out)) = (a.as_ref(), out.as_mut()) else {
        return fail(ShelStatus::NullArgument, "NULL argument");
    };
    *out = match status_of(&a.db.stats(), &a.reports) {
        Status::BoundsFound => ShelAnalysisStatus::BoundsFound,
        Status::NoneFound => ShelAnalysisStatus::NoneFound,
        Status::Capped => ShelAnalysisStatus::Capped,
    };
    ShelStatus::Ok
}

/// Number of Pareto-minimal bound vectors (0 for NULL).
///
/// # Safety
/// `a` must be NULL or a live analysis handle.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_report_count(a: *const ShelAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.reports.len())
}

/// Number of free variables of the analyzed program (0 for NULL).
///
/// # Safety
/// `a` must be NULL or a live analysis handle.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_var_count(a: *const ShelAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.db.vars().len())
}

/// Index of the report with the smallest maximum bound.
///
/// # Safety
/// `a` must be a live analysis handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_smallest_max(a: *const ShelAnalysis, out: *mut usize) -> ShelStatus {
    let (Some(a), Some(out)) = (a.as_ref(), out.as_mut()) else {
        return fail(ShelStatus::NullArgument, "NULL argument");
    };
    match a.reports.iter().position(|r| r.smallest_max) {
        Some(i) => {
            *out = i;
            ShelStatus::Ok
        }
        None => fail(ShelStatus::OutOfRange, "the analysis has no reports"),
    }
}

/// Name of variable `var` (first-occurrence order).
///
/// # Safety
/// `a` must be a live analysis handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_var_name(
    a: *const ShelAnalysis,
    var: usize,
    out: *mut *mut c_char,
) -> ShelStatus {
    guard(|| {
        let Some(a) = a.as_ref() else {
            return fail(ShelStatus::NullArgument, "analysis handle is NULL");
        };
        match a.db.vars().get(var) {
            Some(name) => write_string(out, name.clone()),
            None => fail(ShelStatus::OutOfRange, format!("variable index {var} out of range")),
        }
    })
}

fn bound_at(a: &ShelAnalysis, report: usize, var: usize) -> Result<&Bound, ShelStatus> {
    let r = a
        .reports
        .get(report)
        .ok_or_else(|| fail(ShelStatus::OutOfRange, format!("report index {report} out of range")))?;
    r.bounds
        .get_index(var)
        .map(|(_, b)| b)
        .ok_or_else(|| fail(ShelStatus::OutOfRange, format!("variable index {var} out of range")))
}

/// The bound of variable `var` in report `report` as an exact fraction
/// `num/den` in ε units.
///
/// # Safety
/// `a` must be a live analysis handle; `num` and `den` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_bound(
    a: *const ShelAnalysis,
    report: usize,
    var: usize,
    num: *mut u64,
    den: *mut u64,
) -> ShelStatus {
    guard(|| {
        let (Some(a), Some(num), Some(den)) = (a.as_ref(), num.as_mut(), den.as_mut()) else {
            return fail(ShelStatus::NullArgument, "NULL argument");
        };
        let b = match bound_at(a, report, var) {
            Ok(b) => b,
            Err(s) => return s,
        };
        let q = b.as_rational();
        match (q.numer().to_u64(), q.denom().to_u64()) {
            (Some(n), Some(d)) => {
                *num = n;
                *den = d;
                ShelStatus::Ok
            }
            _ => fail(ShelStatus::Overflow, format!("bound {b} does not fit in 64 bits")),
        }
    })
}

/// The bound of variable `var` in report `report` as a rational string
/// such as `"3/2"`.
///
/// # Safety
/// `a` must be a live analysis handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_bound_string(
    a: *const ShelAnalysis,
    report: usize,
    var: usize,
    out: *mut *mut c_char,
) -> ShelStatus {
    guard(|| {
        let Some(a) = a.as_ref() else {
            return fail(ShelStatus::NullArgument, "analysis handle is NULL");
        };
        match bound_at(a, report, var) {
            Ok(b) => write_string(out, b.to_string()),
            Err(s) => s,
        }
    })
}

/// The analysis as the CLI's JSON document. With `all_bounds` false only
/// the smallest-max report is included.
///
/// # Safety
/// `a` must be a live analysis handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_to_json(
    a: *const ShelAnalysis,
    all_bounds: bool,
    out: *mut *mut c_char,
) -> ShelStatus {
    guard(|| {
        let Some(a) = a.as_ref() else {
            return fail(ShelStatus::NullArgument, "analysis handle is NULL");
        };
        let o = build_output(&a.program, &a.db, &a.reports, a.time_ms, all_bounds, false);
        match serde_json::to_string(&o) {
            Ok(s) => write_string(out, s),
            Err(e) => fail(ShelStatus::Panic, e.to_string()),
        }
    })
}

/// The derivation behind report `report` in its textual form.
///
/// # Safety
/// `a` must be a live analysis handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_analysis_derivation(
    a: *const ShelAnalysis,
    report: usize,
    out: *mut *mut c_char,
) -> ShelStatus {
    guard(|| {
        let Some(a) = a.as_ref() else {
            return fail(ShelStatus::NullArgument, "analysis handle is NULL");
        };
        match a.reports.get(report) {
            Some(r) => write_string(out, extract_derivation(&a.db, r).to_string()),
            None => fail(ShelStatus::OutOfRange, format!("report index {report} out of range")),
        }
    })
}

/// Fills `out` with default certification settings.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_certify_options_default(out: *mut ShelCertifyOptions) -> ShelStatus {
    let Some(out) = out.as_mut() else {
        return fail(ShelStatus::NullArgument, "output pointer is NULL");
    };
    *out = ShelCertifyOptions {
        samples: 1000,
        seed: 1,
        positive_inputs: false,
        precision: DEFAULT_PRECISION,
    };
    ShelStatus::Ok
}

/// Checks report `report` numerically on random binary64 inputs: each
/// sampled witness must reproduce the computed output and stay within the
/// claimed per-variable bounds. `opts` may be NULL for the defaults.
///
/// # Safety
/// `a` must be a live analysis handle, `opts` NULL or valid for reads, and
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn shel_certify(
    a: *const ShelAnalysis,
    report: usize,
    opts: *const ShelCertifyOptions,
    out: *mut ShelCertifySummary,
) -> ShelStatus {
    guard(|| {
        let (Some(a), Some(out)) = (a.as_ref(), out.as_mut()) else {
            return fail(ShelStatus::NullArgument, "NULL argument");
        };
        let mut o = ShelCertifyOptions {
            samples: 0,
            seed: 0,
            positive_inputs: false,
            precision: 0,
        };
        if opts.is_null() {
            shel_certify_options_default(&mut o);
        } else {
            o = *opts;
        }
        let prec = if o.precision == 0 {
            DEFAULT_PRECISION
        } else {
            o.precision
        };
        if prec < shel::numerics::MIN_PRECISION {
            return fail(ShelStatus::InvalidArgument, format!("precision {prec} is too small"));
        }
        let Some(r) = a.reports.get(report) else {
            return fail(ShelStatus::OutOfRange, format!("report index {report} out of range"));
        };
        let cfg = EvalConfig::new(unit_roundoff(Format::Binary64)).with_precision(prec);
        let mut sampler = Sampler::with_seed(o.seed);
        if o.positive_inputs {
            sampler = sampler.positive();
        }
        let d = extract_derivation(&a.db, r);
        match certify(&a.program, r, &d, o.samples, &cfg, &sampler) {
            Ok(rep) => {
                *out = ShelCertifySummary {
                    passed: rep.passed,
                    samples: rep.samples,
                    skipped: rep.skipped,
                    failures: rep.failures,
                    max_residual_log2: rep.max_residual_log2,
                    max_ratio: rep.max_ratio.values().cloned().fold(0.0, f64::max),
                };
                ShelStatus::Ok
            }
            Err(e) => fail(ShelStatus::CertifyError, e.to_string()),
        }
    })
}
