//! C ABI for `fnlab`.
//!
//! Handles are opaque and owned by the caller: every `*_new`/out-pointer
//! result must be released with the matching `*_free`. Reals cross the
//! boundary as decimal strings (`"log2"` and `"log2+1e-3"` are accepted on
//! input). Every function returns an [`FnlabStatus`]; on failure the message
//! is available from [`fnlab_last_error`] until the next call on the same
//! context.

#![allow(clippy::missing_safety_doc)]

use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Mutex;

use fnlab::analysis::{grid, positivity_scan, Spacing};
use fnlab::cli::parse_token;
use fnlab::feval::{
    f_bernoulli_series, f_consensus, f_eulerian_closed, f_hermite_integral, f_laguerre_series, KernelWeight, Sign,
};
use fnlab::polygamma::polygamma_eval;
use fnlab::precision::format_real;
use fnlab::{Error, PrecisionContext};
use rug::Float;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnlabStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Truncation = 3,
    Convergence = 4,
    Consistency = 5,
    Parse = 6,
    Io = 7,
    Internal = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnlabMethod {
    BernoulliSeries = 0,
    LaguerreSeries = 1,
    EulerianClosed = 2,
    HermiteIntegral = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FnlabSign {
    Positive = 1,
    Negative = -1,
    Indeterminate = 0,
}

impl From<Sign> for FnlabSign {
    fn from(s: Sign) -> Self {
        match s {
            Sign::Positive => FnlabSign::Positive,
            Sign::Negative => FnlabSign::Negative,
            Sign::Indeterminate => FnlabSign::Indeterminate,
        }
    }
}

/// Precision settings plus the last error message.
pub struct FnlabContext {
    ctx: PrecisionContext,
    last_error: Mutex<Option<CString>>,
}

/// A value with its absolute error bound and sign classification.
pub struct FnlabValue {
    value: Float,
    error_bound: Float,
    sign: FnlabSign,
}

/// Cell counts of a positivity scan.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct FnlabScanCounts {
    pub positive: u64,
    pub negative: u64,
    pub indeterminate: u64,
    pub anomalies: u64,
}

fn status_of(e: &Error) -> FnlabStatus {
    match e {
        Error::Domain(_) => FnlabStatus::Domain,
        Error::Truncation { .. } => FnlabStatus::Truncation,
        Error::Convergence(_) => FnlabStatus::Convergence,
        Error::Consistency(_) => FnlabStatus::Consistency,
        Error::Parse(_) => FnlabStatus::Parse,
        Error::Io(_) | Error::Json(_) | Error::Csv(_) => FnlabStatus::Io,
    }
}

impl FnlabContext {
    fn set_error(&self, msg: String) {
        let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
        *self.last_error.lock().unwrap_or_else(|p| p.into_inner()) = Some(c);
    }

    fn clear_error(&self) {
        *self.last_error.lock().unwrap_or_else(|p| p.into_inner()) = None;
    }
}

/// Run `f` against a live context, mapping errors and panics to status codes.
unsafe fn guarded(ctx: *const FnlabContext, f: impl FnOnce(&FnlabContext) -> fnlab::Result<()>) -> FnlabStatus {
    let Some(c) = ctx.as_ref() else {
        return FnlabStatus::NullPointer;
    };
    c.clear_error();
    match catch_unwind(AssertUnwindSafe(|| f(c))) {
        Ok(Ok(())) => FnlabStatus::Ok,
        Ok(Err(e)) => {
            c.set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            c.set_error("internal panic".into());
            FnlabStatus::Internal
        }
    }
}

unsafe fn read_real(s: *const c_char, prec: u32) -> fnlab::Result<Float> {
    if s.is_null() {
        return Err(Error::Parse("null string".into()));
    }
    let text = CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Error::Parse("string is not UTF-8".into()))?;
    parse_token(text, prec)
}

unsafe fn put_value(out: *mut *mut FnlabValue, v: FnlabValue) {
    *out = Box::into_raw(Box::new(v));
}

/// Create a context with `target_bits` of target precision (at least 24).
#[no_mangle]
pub unsafe extern "C" fn fnlab_context_new(target_bits: u32, out: *mut *mut FnlabContext) -> FnlabStatus {
    if out.is_null() {
        return FnlabStatus::NullPointer;
    }
    *out = ptr::null_mut();
    match PrecisionContext::new(target_bits) {
        Ok(ctx) => {
            *out = Box::into_raw(Box::new(FnlabContext {
                ctx,
                last_error: Mutex::new(None),
            }));
            FnlabStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn fnlab_context_free(ctx: *mut FnlabContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Message of the last failed call on `ctx`, or NULL. Owned by the context.
#[no_mangle]
pub unsafe extern "C" fn fnlab_last_error(ctx: *const FnlabContext) -> *const c_char {
    let Some(c) = ctx.as_ref() else {
        return ptr::null();
    };
    let guard = c.last_error.lock().unwrap_or_else(|p| p.into_inner());
    guard.as_ref().map_or(ptr::null(), |s| s.as_ptr())
}

/// `f_n(x)` by one method. `tol` is the absolute truncation tolerance for the
/// series and quadrature methods and is ignored by the closed form.
#[no_mangle]
pub unsafe extern "C" fn fnlab_eval(
    ctx: *const FnlabContext,
    method: FnlabMethod,
    n: u32,
    x: *const c_char,
    tol: f64,
    out: *mut *mut FnlabValue,
) -> FnlabStatus {
    if out.is_null() {
        return FnlabStatus::NullPointer;
    }
    *out = ptr::null_mut();
    guarded(ctx, |c| {
        let x = read_real(x, c.ctx.working_bits())?;
        let r = match method {
            FnlabMethod::BernoulliSeries => f_bernoulli_series(n, &x, &c.ctx, tol)?,
            FnlabMethod::LaguerreSeries => f_laguerre_series(n, &x, &c.ctx, tol)?,
            FnlabMethod::EulerianClosed => f_eulerian_closed(n, &x, &c.ctx)?,
            FnlabMethod::HermiteIntegral => {
                f_hermite_integral(n, &x, &c.ctx, 0, KernelWeight::GaussianCorrected, tol)?
            }
        };
        put_value(
            out,
            FnlabValue {
                value: r.value,
                error_bound: r.error_bound,
                sign: r.sign.into(),
            },
        );
        Ok(())
    })
}

/// Cross-checked `f_n(x)`; returns `FNLAB_STATUS_CONSISTENCY` if two rigorous
/// methods disagree.
#[no_mangle]
pub unsafe extern "C" fn fnlab_consensus(
    ctx: *const FnlabContext,
    n: u32,
    x: *const c_char,
    tol: f64,
    out: *mut *mut FnlabValue,
) -> FnlabStatus {
    if out.is_null() {
        return FnlabStatus::NullPointer;
    }
    *out = ptr::null_mut();
    guarded(ctx, |c| {
        let x = read_real(x, c.ctx.working_bits())?;
        let r = f_consensus(n, &x, &c.ctx, tol)?.result;
        put_value(
            out,
            FnlabValue {
                value: r.value,
                error_bound: r.error_bound,
                sign: r.sign.into(),
            },
        );
        Ok(())
    })
}

/// `ψ^{(order)}(x)` for x > 0.
#[no_mangle]
pub unsafe extern "C" fn fnlab_polygamma(
    ctx: *const FnlabContext,
    order: u32,
    x: *const c_char,
    out: *mut *mut FnlabValue,
) -> FnlabStatus {
    if out.is_null() {
        return FnlabStatus::NullPointer;
    }
    *out = ptr::null_mut();
    guarded(ctx, |c| {
        let x = read_real(x, c.ctx.working_bits())?;
        let r = polygamma_eval(order, &x, &c.ctx)?;
        let sign = fnlab::feval::classify(&r.value, &r.error_bound).into();
        put_value(
            out,
            FnlabValue {
                value: r.value,
                error_bound: r.error_bound,
                sign,
            },
        );
        Ok(())
    })
}

/// Positivity scan of n = 0..=n_max on `count` uniform points in `(x_min, x_max]`.
#[no_mangle]
pub unsafe extern "C" fn fnlab_scan(
    ctx: *const FnlabContext,
    n_max: u32,
    x_min: *const c_char,
    x_max: *const c_char,
    count: u32,
    rel_tol: f64,
    out: *mut FnlabScanCounts,
) -> FnlabStatus {
    if out.is_null() {
        return FnlabStatus::NullPointer;
    }
    guarded(ctx, |c| {
        let prec = c.ctx.working_bits();
        let lo = read_real(x_min, prec)?;
        let hi = read_real(x_max, prec)?;
        let xs = grid(&lo, &hi, count as usize, Spacing::Uniform, prec)?;
        let rep = positivity_scan(n_max, &xs, &c.ctx, rel_tol)?;
        *out = FnlabScanCounts {
            positive: rep.count(Sign::Positive) as u64,
            negative: rep.count(Sign::Negative) as u64,
            indeterminate: rep.count(Sign::Indeterminate) as u64,
            anomalies: rep.anomalies().len() as u64,
        };
        Ok(())
    })
}

/// Round-trip-exact decimal string of the value; free with [`fnlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fnlab_value_string(v: *const FnlabValue) -> *mut c_char {
    v.as_ref().map_or(ptr::null_mut(), |v| to_c(format_real(&v.value)))
}

/// Decimal string of the error bound; free with [`fnlab_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fnlab_value_error_bound(v: *const FnlabValue) -> *mut c_char {
    v.as_ref().map_or(ptr::null_mut(), |v| to_c(format_real(&v.error_bound)))
}

/// Nearest double to the value (NaN for a null handle).
#[no_mangle]
pub unsafe extern "C" fn fnlab_value_f64(v: *const FnlabValue) -> f64 {
    v.as_ref().map_or(f64::NAN, |v| v.value.to_f64())
}

#[no_mangle]
pub unsafe extern "C" fn fnlab_value_sign(v: *const FnlabValue) -> FnlabSign {
    v.as_ref().map_or(FnlabSign::Indeterminate, |v| v.sign)
}

#[no_mangle]
pub unsafe extern "C" fn fnlab_value_free(v: *mut FnlabValue) {
    if !v.is_null() {
        drop(Box::from_raw(v));
    }
}

#[no_mangle]
pub unsafe extern "C" fn fnlab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static version string.
#[no_mangle]
pub extern "C" fn fnlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn to_c(s: String) -> *mut c_char {
    CString::new(s).expect("decimal strings have no NUL").into_raw()
}
