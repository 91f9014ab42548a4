//! C ABI over the simulator, estimator and gain tools.
//!
//! Every function returns an [`OscStatus`]. On failure a message is kept per
//! thread and can be read with [`osc_last_error_message`]. Handles are
//! opaque; each `*_new`/`*_run`/`*_read` pairs with exactly one `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use osccomp::estimator::{EstimatorConfig, FreqUpdate, HarmonicEstimator};
use osccomp::lti::RationalTF;
use osccomp::plant::make_gtilde;
use osccomp::powerctl::{gain_bound, sync_delay};
use osccomp::sim::{read_trace, run_scenario, write_trace, ScenarioConfig, ScenarioId, SimTrace};
use osccomp::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    NumericalBlowup = 4,
    PoleOnAxis = 5,
    FrequencyTooLow = 6,
    NotReady = 7,
    Io = 8,
    TraceFormat = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Internal = 12,
}

/// Simulation trace handle.
pub struct OscTrace {
    inner: SimTrace,
}

/// Online biased-harmonic estimator handle.
pub struct OscEstimator {
    inner: HarmonicEstimator,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OscEstimate {
    pub omega_hat: f64,
    pub a_hat: f64,
    pub y0_hat: f64,
    pub phi_hat: f64,
    /// Nonzero once the delay line spans three delays.
    pub ready: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|b| *b != 0);
    let c = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> OscStatus {
    match e {
        Error::Config(_) => OscStatus::Config,
        Error::NumericalBlowup { .. } => OscStatus::NumericalBlowup,
        Error::PoleOnAxis { .. } | Error::SingularResolvent { .. } => OscStatus::PoleOnAxis,
        Error::FrequencyTooLow { .. } => OscStatus::FrequencyTooLow,
        Error::NotReady => OscStatus::NotReady,
        Error::Io { .. } => OscStatus::Io,
        Error::TraceFormat { .. } => OscStatus::TraceFormat,
        Error::InvalidBounds(_) | Error::InvalidModel(_) => OscStatus::InvalidArgument,
        Error::NoOscillatoryMode | Error::InsufficientPeriods { .. } => OscStatus::Internal,
    }
}

struct Fail(OscStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> OscStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OscStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside osccomp");
            OscStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(OscStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn opt_str<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| Fail(OscStatus::InvalidArgument, format!("`{what}` is not UTF-8")))
}

unsafe fn req_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    opt_str(p, what)?.ok_or_else(|| null(what))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn osc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failing call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn osc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Runs a scenario. `scenario` and `config_toml` may be null; `overrides`
/// holds `n_overrides` strings of the form `dotted.key=value`. A run cut
/// short by numerical blowup still succeeds; see `osc_trace_truncated_at`.
///
/// # Safety
/// String arguments must be null or nul-terminated; `overrides` must hold
/// `n_overrides` valid strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osc_run_scenario(
    scenario: *const c_char,
    config_toml: *const c_char,
    overrides: *const *const c_char,
    n_overrides: usize,
    out: *mut *mut OscTrace,
) -> OscStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let id = match opt_str(scenario, "scenario")? {
            Some(s) => Some(
                s.parse::<ScenarioId>()
                    .map_err(|m| Fail(OscStatus::Config, m))?,
            ),
            None => None,
        };
        let text = opt_str(config_toml, "config_toml")?;
        let mut list = Vec::with_capacity(n_overrides);
        if n_overrides > 0 {
            if overrides.is_null() {
                return Err(null("overrides"));
            }
            for i in 0..n_overrides {
                list.push(req_str(*overrides.add(i), "overrides[i]")?.to_string());
            }
        }
        let cfg = ScenarioConfig::resolve(id, text, &list).map_err(Error::from)?;
        let trace = run_scenario(&cfg)?;
        *out = Box::into_raw(Box::new(OscTrace { inner: trace }));
        Ok(())
    })
}

/// # Safety
/// `path` must be nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osc_trace_read(path: *const c_char, out: *mut *mut OscTrace) -> OscStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let trace = read_trace(Path::new(req_str(path, "path")?))?;
        *out = Box::into_raw(Box::new(OscTrace { inner: trace }));
        Ok(())
    })
}

/// # Safety
/// `trace` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn osc_trace_free(trace: *mut OscTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// # Safety
/// `trace` must be a live handle; `path` nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn osc_trace_write(trace: *const OscTrace, path: *const c_char) -> OscStatus {
    guard(|| {
        let trace = trace.as_ref().ok_or_else(|| null("trace"))?;
        write_trace(&trace.inner, Path::new(req_str(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osc_trace_rows(trace: *const OscTrace, out: *mut usize) -> OscStatus {
    guard(|| {
        let trace = trace.as_ref().ok_or_else(|| null("trace"))?;
        *out_ref(out, "out")? = trace.inner.rows.len();
        Ok(())
    })
}

/// Copies column `name` into `buf`. `*written` receives the row count; if
/// `cap` is smaller, nothing is copied and `BufferTooSmall` is returned.
///
/// # Safety
/// `trace` must be a live handle, `name` nul-terminated, `buf` valid for
/// `cap` doubles (may be null when `cap` is 0), `written` writable.
#[no_mangle]
pub unsafe extern "C" fn osc_trace_column(
    trace: *const OscTrace,
    name: *const c_char,
    buf: *mut f64,
    cap: usize,
    written: *mut usize,
) -> OscStatus {
    guard(|| {
        let trace = trace.as_ref().ok_or_else(|| null("trace"))?;
        let name = req_str(name, "name")?;
        let written = out_ref(written, "written")?;
        let col = trace
            .inner
            .column(name)
            .ok_or_else(|| Fail(OscStatus::InvalidArgument, format!("no column `{name}`")))?;
        *written = col.len();
        if cap < col.len() {
            return Err(Fail(
                OscStatus::BufferTooSmall,
                format!("column has {} rows, buffer holds {cap}", col.len()),
            ));
        }
        if !col.is_empty() {
            if buf.is_null() {
                return Err(null("buf"));
            }
            ptr::copy_nonoverlapping(col.as_ptr(), buf, col.len());
        }
        Ok(())
    })
}

/// Metadata value for `key` as text, nul-terminated. `*needed` receives the
/// length including the terminator.
///
/// # Safety
/// `trace` must be a live handle, `key` nul-terminated, `buf` valid for
/// `cap` bytes (may be null when `cap` is 0), `needed` writable.
#[no_mangle]
pub unsafe extern "C" fn osc_trace_meta(
    trace: *const OscTrace,
    key: *const c_char,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> OscStatus {
    guard(|| {
        let trace = trace.as_ref().ok_or_else(|| null("trace"))?;
        let key = req_str(key, "key")?;
        let needed = out_ref(needed, "needed")?;
        let value = trace
            .inner
            .meta(key)
            .ok_or_else(|| Fail(OscStatus::InvalidArgument, format!("no metadata key `{key}`")))?;
        *needed = value.len() + 1;
        if cap < *needed {
            return Err(Fail(
                OscStatus::BufferTooSmall,
                format!("value needs {} bytes, buffer holds {cap}", *needed),
            ));
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        ptr::copy_nonoverlapping(value.as_ptr().cast(), buf, value.len());
        *buf.add(value.len()) = 0;
        Ok(())
    })
}

/// `*truncated` is set to 1 and `*at` to the blowup time when the run was
/// cut short, otherwise 0 and NaN.
///
/// # Safety
/// `trace` must be a live handle; outputs writable.
#[no_mangle]
pub unsafe extern "C" fn osc_trace_truncated_at(
    trace: *const OscTrace,
    truncated: *mut i32,
    at: *mut f64,
) -> OscStatus {
    guard(|| {
        let trace = trace.as_ref().ok_or_else(|| null("trace"))?;
        let (flag, t) = match trace.inner.truncated_at() {
            Some(t) => (1, t),
            None => (0, f64::NAN),
        };
        *out_ref(truncated, "truncated")? = flag;
        *out_ref(at, "at")? = t;
        Ok(())
    })
}

/// Creates an estimator; `finite_time` nonzero selects the finite-time
/// frequency update, zero the gradient one.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osc_estimator_new(
    tau: f64,
    gamma1: f64,
    gamma2: f64,
    finite_time: i32,
    omega_guess: f64,
    dt: f64,
    out: *mut *mut OscEstimator,
) -> OscStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let positive = [("tau", tau), ("gamma1", gamma1), ("gamma2", gamma2), ("omega_guess", omega_guess), ("dt", dt)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(Fail(OscStatus::InvalidArgument, format!("`{name}` must be positive and finite, got {v}")));
        }
        let cfg = EstimatorConfig {
            tau,
            gamma1,
            gamma2,
            freq_update: if finite_time != 0 {
                FreqUpdate::FiniteTime
            } else {
                FreqUpdate::Gradient
            },
            ..EstimatorConfig::default()
        };
        let est = HarmonicEstimator::new(&cfg, omega_guess, dt);
        *out = Box::into_raw(Box::new(OscEstimator { inner: est }));
        Ok(())
    })
}

/// Feeds one sample `y` taken at time `t`.
///
/// # Safety
/// `est` must be a live handle; `out` may be null.
#[no_mangle]
pub unsafe extern "C" fn osc_estimator_update(
    est: *mut OscEstimator,
    y: f64,
    t: f64,
    out: *mut OscEstimate,
) -> OscStatus {
    guard(|| {
        let est = est.as_mut().ok_or_else(|| null("est"))?;
        let e = est.inner.update(y, t);
        if let Some(out) = out.as_mut() {
            *out = OscEstimate {
                omega_hat: e.omega_hat,
                a_hat: e.a_hat,
                y0_hat: e.y0_hat,
                phi_hat: e.phi_hat,
                ready: i32::from(est.inner.is_ready()),
            };
        }
        Ok(())
    })
}

/// # Safety
/// `est` must come from this library and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn osc_estimator_free(est: *mut OscEstimator) {
    if !est.is_null() {
        drop(Box::from_raw(est));
    }
}

unsafe fn tf_or_default(num: *const f64, n_num: usize, den: *const f64, n_den: usize) -> Result<RationalTF, Fail> {
    if n_num == 0 && n_den == 0 {
        return Ok(make_gtilde());
    }
    let num = slice(num, n_num, "num")?.to_vec();
    let den = slice(den, n_den, "den")?.to_vec();
    Ok(RationalTF::new(num, den)?)
}

/// Upper bound `1/|G(j omega)|` on the shaping gain. Coefficients are in
/// descending powers; pass zero lengths for the built-in sub-dynamics.
///
/// # Safety
/// `num`/`den` must be valid for their lengths; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn osc_gain_bound(
    num: *const f64,
    n_num: usize,
    den: *const f64,
    n_den: usize,
    omega: f64,
    out: *mut f64,
) -> OscStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let tf = tf_or_default(num, n_num, den, n_den)?;
        *out = gain_bound(&tf, omega)?;
        Ok(())
    })
}

/// Compensator delay `(2 pi + arg G(j mult omega_hat)) / omega_hat` on the
/// built-in sub-dynamics, in seconds.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn osc_sync_delay(omega_hat: f64, mult: f64, omega_floor: f64, out: *mut f64) -> OscStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = sync_delay(&make_gtilde(), omega_hat, mult, omega_floor)?;
        Ok(())
    })
}
