//! C ABI over `orlicz-embed`.
//!
//! Every fallible call returns an [`OrlStatus`] and writes its result through
//! an out-pointer, which is left untouched on failure. A description of the
//! failure is available from [`orl_last_error_message`] on the same thread. Handles are opaque and
//! must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use orlicz_embed::combinatorics::{ave_quadratic, Mode};
use orlicz_embed::construction::{knots_from_weights, orlicz_from_knots, weights_from_orlicz, WeightSequence};
use orlicz_embed::harness::c_n;
use orlicz_embed::orlicz::{luxemburg_norm, orlicz_norm, DualFunction, OrliczSpec};
use orlicz_embed::Error;

const NORM_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-10;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    NotConvex = 3,
    DomainExceeded = 4,
    NotNormalized = 5,
    NotTwoConcave = 6,
    DegenerateProfile = 7,
    NotDecreasing = 8,
    NotPositive = 9,
    LengthMismatch = 10,
    TooLargeForExact = 11,
    NumericalFailure = 12,
    Panic = 13,
}

impl From<&Error> for OrlStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::NotStrictlyConvex { .. } | Error::NotConvex { .. } => OrlStatus::NotConvex,
            Error::DomainExceeded { .. } => OrlStatus::DomainExceeded,
            Error::NotNormalized { .. } => OrlStatus::NotNormalized,
            Error::NotTwoConcave { .. } => OrlStatus::NotTwoConcave,
            Error::DegenerateProfile { .. } => OrlStatus::DegenerateProfile,
            Error::NotDecreasing { .. } | Error::NotStrictlyIncreasing { .. } => OrlStatus::NotDecreasing,
            Error::NotPositive { .. } => OrlStatus::NotPositive,
            Error::LengthMismatch { .. } => OrlStatus::LengthMismatch,
            Error::TooLargeForExact { .. } => OrlStatus::TooLargeForExact,
            Error::NotBracketed { .. } | Error::NoConvergence { .. } => OrlStatus::NumericalFailure,
            Error::ZeroVector | Error::InvalidInput(_) => OrlStatus::InvalidInput,
        }
    }
}

/// The dual `M*` of an Orlicz function.
pub struct OrlDual {
    dual: DualFunction,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `body`, translating errors and panics into a status.
fn guard<F: FnOnce() -> Result<(), Failure>>(body: F) -> OrlStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error(String::new());
            OrlStatus::Ok
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            OrlStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            OrlStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            OrlStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn handle<'a>(d: *const OrlDual) -> Result<&'a OrlDual, Failure> {
    d.as_ref().ok_or(Failure::Null("dual handle"))
}

/// The dual of `|t|^p`, `1 ≤ p ≤ 2`; with `normalized` the argument is
/// rescaled so that `M*(1) = 1`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn orl_dual_power(p: f64, normalized: bool, out: *mut *mut OrlDual) -> OrlStatus {
    guard(|| {
        let out = output(out, "out")?;
        let spec = if normalized { OrliczSpec::PowerNormalized(p) } else { OrliczSpec::Power(p) };
        *out = Box::into_raw(Box::new(OrlDual { dual: spec.dual()? }));
        Ok(())
    })
}

/// The piecewise-affine dual whose inverse has knots built from the
/// nonincreasing positive weights `a[0..len]`.
///
/// # Safety
/// `a` must point to `len` readable doubles and `out` to writable storage
/// for one handle.
#[no_mangle]
pub unsafe extern "C" fn orl_dual_from_weights(a: *const f64, len: usize, out: *mut *mut OrlDual) -> OrlStatus {
    guard(|| {
        let a = WeightSequence::new(input(a, len, "a")?.to_vec())?;
        let out = output(out, "out")?;
        *out = Box::into_raw(Box::new(OrlDual { dual: orlicz_from_knots(&knots_from_weights(&a)?)? }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `d` must be null or a handle returned by this library that has not been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn orl_dual_free(d: *mut OrlDual) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// `M*(t)`.
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orl_dual_eval(d: *const OrlDual, t: f64, out: *mut f64) -> OrlStatus {
    guard(|| {
        let v = handle(d)?.dual.eval(t)?;
        *output(out, "out")? = v;
        Ok(())
    })
}

/// `(M*)^{-1}(v)`, `v ≥ 0`.
///
/// # Safety
/// `d` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orl_dual_inverse(d: *const OrlDual, v: f64, out: *mut f64) -> OrlStatus {
    guard(|| {
        let r = handle(d)?.dual.inverse(v)?;
        *output(out, "out")? = r;
        Ok(())
    })
}

/// `sup { Σ x_i y_i : Σ M*(y_i) ≤ 1 }`.
///
/// # Safety
/// `d` must be a live handle, `x` must point to `len` readable doubles and
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orl_orlicz_norm(d: *const OrlDual, x: *const f64, len: usize, out: *mut f64) -> OrlStatus {
    guard(|| {
        let r = orlicz_norm(input(x, len, "x")?, &handle(d)?.dual, NORM_TOL)?;
        *output(out, "out")? = r;
        Ok(())
    })
}

/// Luxemburg norm of `x` for `M(t) = |t|^p`, `1 ≤ p ≤ 2`.
///
/// # Safety
/// `x` must point to `len` readable doubles and `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orl_luxemburg_power(p: f64, x: *const f64, len: usize, out: *mut f64) -> OrlStatus {
    guard(|| {
        let m = OrliczSpec::Power(p).orlicz()?;
        let r = luxemburg_norm(input(x, len, "x")?, &m, NORM_TOL)?;
        *output(out, "out")? = r;
        Ok(())
    })
}

/// Weights `a_1 ≥ … ≥ a_n` generated from `|t|^p` normalized so that
/// `M*(1) = 1`; `1 < p < 2`.
///
/// # Safety
/// `out` must point to `n` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn orl_weights_from_power(p: f64, n: usize, out: *mut f64) -> OrlStatus {
    guard(|| {
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let m = OrliczSpec::PowerNormalized(p).orlicz()?;
        let a = weights_from_orlicz(&m, n, WEIGHT_TOL)?;
        ptr::copy_nonoverlapping(a.as_slice().as_ptr(), out, n);
        Ok(())
    })
}

/// The exact average over all permutations `π` of `(Σ_i |x_i a_{π(i)}|²)^{1/2}`.
///
/// # Safety
/// `x` and `a` must each point to `len` readable doubles and `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn orl_ave_quadratic_exact(x: *const f64, a: *const f64, len: usize, out: *mut f64) -> OrlStatus {
    guard(|| {
        let a = WeightSequence::new(input(a, len, "a")?.to_vec())?;
        let r = ave_quadratic(input(x, len, "x")?, &a, Mode::exact())?.value();
        *output(out, "out")? = r;
        Ok(())
    })
}

/// `1 − 1/2! + 1/3! − … + (−1)^{n+1}/n!`.
#[no_mangle]
pub extern "C" fn orl_c_n(n: usize) -> f64 {
    c_n(n)
}

/// Why the most recent call on this thread failed; empty after a successful
/// call. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn orl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}
