//! C interface to `tness`.
//!
//! Every fallible function returns `TNESS_OK` (0) or a negative error code
//! and writes its result through an out-pointer. The message of the most
//! recent error on the calling thread is available from
//! [`tness_last_error`]. Estimands, rules and simulation reports are opaque
//! handles released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tness::compromise::{compromise_estimate, ARule};
use tness::densities::{t_cdf, t_quantile};
use tness::estimand::{parse_estimand, Estimand};
use tness::estimation::{fit_narrow, fit_wide, FitOptions, FitResult};
use tness::risk::{risk_quadrature, tolerance_threshold};
use tness::simulate::{SimConfig, SimReport};
use tness::Error;

pub const TNESS_OK: i32 = 0;
pub const TNESS_ERR_NULL_POINTER: i32 = -1;
pub const TNESS_ERR_DOMAIN: i32 = -2;
pub const TNESS_ERR_INSUFFICIENT_DATA: i32 = -3;
pub const TNESS_ERR_DEGENERATE: i32 = -4;
pub const TNESS_ERR_SINGULAR: i32 = -5;
pub const TNESS_ERR_NONCONVERGENCE: i32 = -6;
pub const TNESS_ERR_QUADRATURE: i32 = -7;
pub const TNESS_ERR_INVALID_CONFIG: i32 = -8;
pub const TNESS_ERR_PARSE: i32 = -9;
pub const TNESS_ERR_IO: i32 = -10;
pub const TNESS_ERR_PANIC: i32 = -11;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::Domain(_) => TNESS_ERR_DOMAIN,
        Error::InsufficientData(_) => TNESS_ERR_INSUFFICIENT_DATA,
        Error::Degenerate(_) => TNESS_ERR_DEGENERATE,
        Error::Singular(_) => TNESS_ERR_SINGULAR,
        Error::NonConvergence { .. } => TNESS_ERR_NONCONVERGENCE,
        Error::Quadrature { .. } => TNESS_ERR_QUADRATURE,
        Error::InvalidConfig(_) => TNESS_ERR_INVALID_CONFIG,
        Error::Parse(_) => TNESS_ERR_PARSE,
        Error::Io(_) => TNESS_ERR_IO,
    }
}

/// Runs `f`, translating errors and panics into codes.
fn guard(f: impl FnOnce() -> Result<(), i32>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TNESS_OK,
        Ok(Err(code)) => code,
        Err(_) => {
            set_error("internal panic".into());
            TNESS_ERR_PANIC
        }
    }
}

fn fail(e: Error) -> i32 {
    let code = code_of(&e);
    set_error(e.to_string());
    code
}

fn null_arg(name: &str) -> i32 {
    set_error(format!("{name} is NULL"));
    TNESS_ERR_NULL_POINTER
}

unsafe fn slice<'a>(data: *const f64, n: usize) -> Result<&'a [f64], i32> {
    if n == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null_arg("data"));
    }
    Ok(std::slice::from_raw_parts(data, n))
}

unsafe fn string<'a>(s: *const c_char, name: &str) -> Result<&'a str, i32> {
    if s.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(s).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        TNESS_ERR_PARSE
    })
}

unsafe fn write<T>(out: *mut T, value: T, name: &str) -> Result<(), i32> {
    if out.is_null() {
        return Err(null_arg(name));
    }
    out.write(value);
    Ok(())
}

/// Message of the last error on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn tness_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tness_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Result of an i.i.d. fit. `m` is `1/gamma`, `INFINITY` at the corner.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TnessFit {
    pub xi: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub m: f64,
    pub loglik: f64,
    pub at_corner: bool,
    pub converged: bool,
    pub n_iter: u64,
}

impl From<&FitResult> for TnessFit {
    fn from(f: &FitResult) -> Self {
        TnessFit {
            xi: f.xi(),
            sigma: f.sigma,
            gamma: f.gamma,
            m: f.dof(),
            loglik: f.loglik,
            at_corner: f.at_corner,
            converged: f.converged,
            n_iter: f.n_iter as u64,
        }
    }
}

/// Normal-model ML fit of `n` observations.
///
/// # Safety
/// `data` must point to `n` doubles and `out` to a writable `TnessFit`.
#[no_mangle]
pub unsafe extern "C" fn tness_fit_narrow(data: *const f64, n: usize, out: *mut TnessFit) -> i32 {
    guard(|| {
        let y = slice(data, n)?;
        let f = fit_narrow(y).map_err(fail)?;
        write(out, TnessFit::from(&f), "out")
    })
}

/// t-model ML fit with `gamma >= 0`. On non-convergence the best iterate is
/// still written to `out` and `TNESS_ERR_NONCONVERGENCE` returned.
///
/// # Safety
/// As for [`tness_fit_narrow`].
#[no_mangle]
pub unsafe extern "C" fn tness_fit_wide(data: *const f64, n: usize, out: *mut TnessFit) -> i32 {
    guard(|| {
        let y = slice(data, n)?;
        match fit_wide(y, &FitOptions::default()) {
            Ok(f) => write(out, TnessFit::from(&f), "out"),
            Err(Error::NonConvergence { iterations, best }) => {
                write(out, TnessFit::from(best.as_ref()), "out")?;
                Err(fail(Error::NonConvergence { iterations, best }))
            }
            Err(e) => Err(fail(e)),
        }
    })
}

/// Opaque estimand handle.
pub struct TnessEstimand(Box<dyn Estimand>);

/// Opaque compromise-rule handle.
pub struct TnessRule(ARule);

/// Parses `mean`, `sd`, `mad`, `quantile[:p]` or `prob:y`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tness_estimand_new(spec: *const c_char, out: *mut *mut TnessEstimand) -> i32 {
    guard(|| {
        let s = string(spec, "spec")?;
        let e = parse_estimand(s).map_err(fail)?;
        write(out, Box::into_raw(Box::new(TnessEstimand(e))), "out")
    })
}

/// # Safety
/// `e` must come from [`tness_estimand_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tness_estimand_free(e: *mut TnessEstimand) {
    if !e.is_null() {
        drop(Box::from_raw(e));
    }
}

/// Parses `narrow`, `wide`, `ratio`, `eb`, `vague`, `bayes:tau`, `pre[:d]` or `lim[:d]`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tness_rule_new(spec: *const c_char, out: *mut *mut TnessRule) -> i32 {
    guard(|| {
        let s = string(spec, "spec")?;
        let r: ARule = s.parse().map_err(fail)?;
        write(out, Box::into_raw(Box::new(TnessRule(r))), "out")
    })
}

/// # Safety
/// `r` must come from [`tness_rule_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tness_rule_free(r: *mut TnessRule) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Compromise estimate `mu*` of an estimand from `n` observations.
///
/// # Safety
/// `data` must point to `n` doubles; handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tness_compromise_estimate(
    data: *const f64,
    n: usize,
    estimand: *const TnessEstimand,
    rule: *const TnessRule,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let y = slice(data, n)?;
        let e = estimand.as_ref().ok_or_else(|| null_arg("estimand"))?;
        let r = rule.as_ref().ok_or_else(|| null_arg("rule"))?;
        let v = compromise_estimate(y, e.0.as_ref(), &r.0).map_err(fail)?;
        write(out, v, "out")
    })
}

/// Limiting risk `R(a)` of a rule.
///
/// # Safety
/// `rule` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tness_risk(rule: *const TnessRule, a: f64, out: *mut f64) -> i32 {
    guard(|| {
        let r = rule.as_ref().ok_or_else(|| null_arg("rule"))?;
        let v = risk_quadrature(&r.0, a).map_err(fail)?;
        write(out, v, "out")
    })
}

/// Tolerance threshold `a*`, `delta*` and the coefficient in `m >= coeff·√n`.
/// Any out-pointer may be NULL.
///
/// # Safety
/// Non-NULL pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn tness_threshold(a_star: *mut f64, delta_star: *mut f64, m_coeff: *mut f64) -> i32 {
    guard(|| {
        let t = tolerance_threshold();
        for (p, v) in [(a_star, t.a_star), (delta_star, t.delta_star), (m_coeff, t.m_coeff)] {
            if !p.is_null() {
                p.write(v);
            }
        }
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tness_t_cdf(x: f64, m: f64, out: *mut f64) -> i32 {
    guard(|| write(out, t_cdf(x, m).map_err(fail)?, "out"))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tness_t_quantile(p: f64, m: f64, out: *mut f64) -> i32 {
    guard(|| write(out, t_quantile(p, m).map_err(fail)?, "out"))
}

/// Opaque simulation report.
pub struct TnessSimReport {
    json: CString,
    report: SimReport,
}

/// Reads a config where only `kind`, `n`, `delta`, `replicates` and `seed`
/// are required; other fields take their usual defaults.
fn parse_config(s: &str) -> Result<SimConfig, Error> {
    use serde_json::Value;
    let parse = |e: serde_json::Error| Error::Parse(e.to_string());
    let given: Value = serde_json::from_str(s).map_err(parse)?;
    let Value::Object(given) = given else {
        return Err(Error::Parse("config must be a JSON object".into()));
    };
    #[derive(serde::Deserialize)]
    struct Core {
        kind: tness::simulate::SimKind,
        n: usize,
        delta: f64,
        replicates: usize,
        seed: u64,
    }
    let core: Core = serde_json::from_value(Value::Object(given.clone())).map_err(parse)?;
    let base = SimConfig::new(core.kind, core.n, core.delta, core.replicates, core.seed);
    let Value::Object(mut merged) = serde_json::to_value(&base).map_err(parse)? else {
        unreachable!()
    };
    merged.extend(given);
    serde_json::from_value(Value::Object(merged)).map_err(parse)
}

/// Runs a simulation described by a JSON `SimConfig`. Fields other than
/// `kind`, `n`, `delta`, `replicates` and `seed` are optional.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tness_simulate(config_json: *const c_char, out: *mut *mut TnessSimReport) -> i32 {
    guard(|| {
        let s = string(config_json, "config_json")?;
        let cfg = parse_config(s).map_err(fail)?;
        let report = tness::simulate::run(&cfg).map_err(fail)?;
        let json = CString::new(report.to_json().map_err(fail)?).map_err(|e| fail(Error::Parse(e.to_string())))?;
        write(out, Box::into_raw(Box::new(TnessSimReport { json, report })), "out")
    })
}

/// The report as JSON, owned by the handle.
///
/// # Safety
/// `r` must be live.
#[no_mangle]
pub unsafe extern "C" fn tness_sim_report_json(r: *const TnessSimReport) -> *const c_char {
    r.as_ref().map_or(ptr::null(), |r| r.json.as_ptr())
}

/// Corner frequency, or NaN when the run did not record one.
///
/// # Safety
/// `r` must be live.
#[no_mangle]
pub unsafe extern "C" fn tness_sim_report_corner_freq(r: *const TnessSimReport) -> f64 {
    r.as_ref().and_then(|r| r.report.corner_freq).unwrap_or(f64::NAN)
}

/// # Safety
/// `r` must come from [`tness_simulate`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tness_sim_report_free(r: *mut TnessSimReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
