//! C ABI for the `wmd` library.
//!
//! Every fallible function returns a [`WmdStatus`]; on failure the message
//! is available from [`wmd_last_error`] on the same thread. Samples are
//! opaque handles released with [`wmd_sample_free`]; strings returned by
//! the library are released with [`wmd_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use wmd::sim::{parse_scenarios, run_scenario};
use wmd::{
    analytic_power, asymptotic_variance, optimal_weights, Error, ErrorClass, Method, Moments,
    PartiallyPairedSample, PowerParams, SeMode, WeightPair,
};

/// Status codes. Values 2-4 match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WmdStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Invalid arguments or malformed input.
    InputError = 2,
    /// The data do not support the requested computation.
    Degenerate = 3,
    /// Internal failure, including a caught panic.
    Internal = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WmdMethod {
    WmdOptimal = 0,
    WmdSimple = 1,
    WmdComplete = 2,
    /// Uses the `w1`, `w2` arguments of [`wmd_test`].
    WmdFixed = 3,
    /// Uses `w1` as the mixing weight; NaN selects the default.
    Bhoj = 4,
    TPairedComplete = 5,
    TPairedImputed = 6,
    WilcoxonComplete = 7,
    WilcoxonImputed = 8,
}

/// Opaque sample handle.
pub struct WmdSample(PartiallyPairedSample);

/// Population moments used by the weight and variance functions.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WmdMoments {
    pub p1: f64,
    pub p2: f64,
    pub p12: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct WmdTestResult {
    pub estimate: f64,
    pub std_error: f64,
    pub statistic: f64,
    pub p_value: f64,
    /// NaN for tests that do not use weights.
    pub w1: f64,
    pub w2: f64,
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> WmdStatus {
    match e.class() {
        ErrorClass::Input => WmdStatus::InputError,
        ErrorClass::Degenerate => WmdStatus::Degenerate,
        ErrorClass::Internal => WmdStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic for [`wmd_last_error`].
fn guard<F: FnOnce() -> Result<(), WmdStatusError>>(f: F) -> WmdStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WmdStatus::Ok,
        Ok(Err(WmdStatusError::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            WmdStatus::NullPointer
        }
        Ok(Err(WmdStatusError::Lib(e))) => {
            set_error(format!("{}: {e}", e.code()));
            status_of(&e)
        }
        Err(_) => {
            set_error("internal_error: panic in library".into());
            WmdStatus::Internal
        }
    }
}

enum WmdStatusError {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for WmdStatusError {
    fn from(e: Error) -> Self {
        WmdStatusError::Lib(e)
    }
}

fn non_null<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, WmdStatusError> {
    // SAFETY: callers pass either null or a pointer to a live, aligned T.
    unsafe { p.as_ref() }.ok_or(WmdStatusError::Null(what))
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, WmdStatusError> {
    // SAFETY: callers pass either null or a writable, aligned T.
    unsafe { p.as_mut() }.ok_or(WmdStatusError::Null(what))
}

fn moments(m: &WmdMoments) -> Moments {
    Moments {
        p1: m.p1,
        p2: m.p2,
        p12: m.p12,
        sigma1: m.sigma1,
        sigma2: m.sigma2,
        rho: m.rho,
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn wmd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a sample from `len` subject rows; NaN marks a missing value and
/// rows missing both values are dropped.
///
/// # Safety
/// `y1` and `y2` must point to `len` readable doubles; `out_sample` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmd_sample_new(
    y1: *const f64,
    y2: *const f64,
    len: usize,
    out_sample: *mut *mut WmdSample,
) -> WmdStatus {
    guard(|| {
        let slot = out(out_sample, "out_sample")?;
        *slot = ptr::null_mut();
        let (a, b) = if len == 0 {
            (&[][..], &[][..])
        } else {
            non_null(y1, "y1")?;
            non_null(y2, "y2")?;
            // SAFETY: both pointers are non-null and the caller guarantees `len` elements.
            unsafe {
                (
                    std::slice::from_raw_parts(y1, len),
                    std::slice::from_raw_parts(y2, len),
                )
            }
        };
        let opt = |v: f64| if v.is_nan() { None } else { Some(v) };
        let ingested =
            PartiallyPairedSample::from_rows(a.iter().zip(b).map(|(&x, &y)| (opt(x), opt(y))))?;
        *slot = Box::into_raw(Box::new(WmdSample(ingested.sample)));
        Ok(())
    })
}

/// Releases a sample. Null is ignored.
///
/// # Safety
/// `sample` must come from [`wmd_sample_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wmd_sample_free(sample: *mut WmdSample) {
    if !sample.is_null() {
        // SAFETY: the pointer was produced by Box::into_raw in wmd_sample_new.
        drop(unsafe { Box::from_raw(sample) });
    }
}

/// Block sizes: complete pairs, group-1-only and group-2-only subjects.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmd_sample_counts(
    sample: *const WmdSample,
    n0: *mut usize,
    n1: *mut usize,
    n2: *mut usize,
) -> WmdStatus {
    guard(|| {
        let s = &non_null(sample, "sample")?.0;
        *out(n0, "n0")? = s.n0();
        *out(n1, "n1")? = s.n1();
        *out(n2, "n2")? = s.n2();
        Ok(())
    })
}

/// Runs a test. `bootstrap_b = 0` selects the plug-in standard error for
/// the weighted tests; otherwise `bootstrap_b` resamples seeded by `seed`.
///
/// # Safety
/// `sample` and `result` must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmd_test(
    sample: *const WmdSample,
    method: WmdMethod,
    w1: f64,
    w2: f64,
    bootstrap_b: usize,
    seed: u64,
    result: *mut WmdTestResult,
) -> WmdStatus {
    guard(|| {
        let s = &non_null(sample, "sample")?.0;
        let slot = out(result, "result")?;
        let method = match method {
            WmdMethod::WmdOptimal => Method::WmdOptimal,
            WmdMethod::WmdSimple => Method::WmdSimple,
            WmdMethod::WmdComplete => Method::WmdComplete,
            WmdMethod::WmdFixed => Method::WmdFixed { w1, w2 },
            WmdMethod::Bhoj => Method::Bhoj {
                lambda: if w1.is_nan() { None } else { Some(w1) },
            },
            WmdMethod::TPairedComplete => Method::TPairedComplete,
            WmdMethod::TPairedImputed => Method::TPairedImputed,
            WmdMethod::WilcoxonComplete => Method::WilcoxonComplete,
            WmdMethod::WilcoxonImputed => Method::WilcoxonImputed,
        };
        method.validate()?;
        let se = match bootstrap_b {
            0 => SeMode::PlugIn,
            b => SeMode::Bootstrap { replicates: b },
        };
        let r = method.run(s, se, seed)?;
        *slot = WmdTestResult {
            estimate: r.estimate,
            std_error: r.std_error,
            statistic: r.statistic,
            p_value: r.p_value,
            w1: r.weights.map_or(f64::NAN, |w| w.w1),
            w2: r.weights.map_or(f64::NAN, |w| w.w2),
            n0: r.n0,
            n1: r.n1,
            n2: r.n2,
        };
        Ok(())
    })
}

/// Variance-minimizing weights and the minimal asymptotic variance.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmd_optimal_weights(
    m: *const WmdMoments,
    w1: *mut f64,
    w2: *mut f64,
    variance: *mut f64,
) -> WmdStatus {
    guard(|| {
        let sol = optimal_weights(&moments(non_null(m, "moments")?))?;
        *out(w1, "w1")? = sol.weights.w1;
        *out(w2, "w2")? = sol.weights.w2;
        *out(variance, "variance")? = sol.objective;
        Ok(())
    })
}

/// Asymptotic variance of the scaled estimator at fixed weights.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmd_asymptotic_variance(
    m: *const WmdMoments,
    w1: f64,
    w2: f64,
    variance: *mut f64,
) -> WmdStatus {
    guard(|| {
        let w = WeightPair::fixed(w1, w2)?;
        *out(variance, "variance")? = asymptotic_variance(&moments(non_null(m, "moments")?), &w)?;
        Ok(())
    })
}

/// Two-sided asymptotic power at level `alpha` with `n` subjects.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn wmd_analytic_power(
    m: *const WmdMoments,
    mu1: f64,
    mu2: f64,
    w1: f64,
    w2: f64,
    n: usize,
    alpha: f64,
    power: *mut f64,
) -> WmdStatus {
    guard(|| {
        let params = PowerParams {
            moments: moments(non_null(m, "moments")?),
            mu1,
            mu2,
        };
        let w = WeightPair::fixed(w1, w2)?;
        *out(power, "power")? = analytic_power(&params, &w, n, alpha)?;
        Ok(())
    })
}

/// Standard normal distribution function.
#[no_mangle]
pub extern "C" fn wmd_normal_cdf(x: f64) -> f64 {
    wmd::stats::normal_cdf(x)
}

/// Runs every scenario in `scenario_text` (scenario-file syntax) and
/// returns a JSON array of reports in `*json_out`. Release it with
/// [`wmd_string_free`].
///
/// # Safety
/// `scenario_text` must be a NUL-terminated string; `json_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn wmd_simulate(
    scenario_text: *const c_char,
    json_out: *mut *mut c_char,
) -> WmdStatus {
    guard(|| {
        let slot = out(json_out, "json_out")?;
        *slot = ptr::null_mut();
        non_null(scenario_text, "scenario_text")?;
        // SAFETY: non-null and NUL-terminated per the contract above.
        let text = unsafe { CStr::from_ptr(scenario_text) }
            .to_str()
            .map_err(|_| Error::InvalidParams("scenario text is not UTF-8".into()))?;
        let reports = parse_scenarios(text)?
            .iter()
            .map(run_scenario)
            .collect::<wmd::Result<Vec<_>>>()?;
        let json = serde_json::to_string(&reports).map_err(|e| Error::Internal(e.to_string()))?;
        *slot = CString::new(json)
            .map_err(|e| Error::Internal(e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn wmd_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}
