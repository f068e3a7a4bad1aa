//! C ABI over the formnorm toolkit.
//!
//! Objects cross the boundary as opaque heap handles created by a
//! `formnorm_*_new` function and released by the matching `*_free`. Every
//! entry point returns a [`FormnormStatus`]; on failure the message is
//! available from [`formnorm_last_error_message`] on the same thread.
//! Strings returned by the library are released with
//! [`formnorm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use formnorm::corpus::build_form;
use formnorm::norms::{luxemburg_or_infinite, oscillation_norm, Samples};
use formnorm::report::Status;
use formnorm::{decomposition_residual, DifferentialForm, Domain, Error, HomotopySettings, OscillationNormSpec, RunConfig, YoungFunction};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormnormStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidUtf8 = 3,
    Parse = 4,
    Config = 5,
    OutOfDomain = 6,
    Numerical = 7,
    RejectedPair = 8,
    /// The suite ran but at least one verifier failed; the report is still
    /// returned.
    VerificationFailed = 9,
    BufferTooSmall = 10,
    Io = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormnormOscillationKind {
    Bmo = 0,
    Lipschitz = 1,
}

pub struct FormnormDomain(Domain);
pub struct FormnormForm(DifferentialForm);
pub struct FormnormYoung(YoungFunction);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(FormnormStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidInput(_) | Error::InvalidDegree(_) | Error::EmptyFamily(_) => FormnormStatus::InvalidInput,
            Error::OutOfDomain { .. } => FormnormStatus::OutOfDomain,
            Error::DivergedIntegral { .. } | Error::NoConvergence { .. } | Error::NonMonotone { .. } => {
                FormnormStatus::Numerical
            }
            Error::Parse { .. } => FormnormStatus::Parse,
            Error::RejectedPair(_) => FormnormStatus::RejectedPair,
            Error::Config(_) => FormnormStatus::Config,
            Error::Io(_) => FormnormStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FormnormStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FormnormStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FormnormStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("internal panic: {msg}"));
            FormnormStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FormnormStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn coords<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn store<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn store_handle<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    store(out, Box::into_raw(Box::new(value)))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn formnorm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or an empty string.
/// Valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn formnorm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Axis-aligned box `[lower, upper]` in `dims` dimensions with
/// `resolution` Gauss–Legendre nodes per axis.
///
/// # Safety
/// `lower` and `upper` point to `dims` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_domain_new_box(
    dims: usize,
    lower: *const f64,
    upper: *const f64,
    resolution: usize,
    out: *mut *mut FormnormDomain,
) -> FormnormStatus {
    guard(|| {
        let d = Domain::new_box(coords(lower, dims, "lower")?, coords(upper, dims, "upper")?, resolution)?;
        store_handle(out, FormnormDomain(d))
    })
}

/// Euclidean ball.
///
/// # Safety
/// `center` points to `dims` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_domain_new_ball(
    dims: usize,
    center: *const f64,
    radius: f64,
    resolution: usize,
    out: *mut *mut FormnormDomain,
) -> FormnormStatus {
    guard(|| {
        let d = Domain::new_ball(coords(center, dims, "center")?, radius, resolution)?;
        store_handle(out, FormnormDomain(d))
    })
}

/// # Safety
/// `domain` is null or a handle from `formnorm_domain_new_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn formnorm_domain_free(domain: *mut FormnormDomain) {
    if !domain.is_null() {
        drop(Box::from_raw(domain));
    }
}

/// Young function from a spec such as `power:2`, `power_log:1.5` or
/// `custom:t^3/(1 + t)`.
///
/// # Safety
/// `spec` is a NUL-terminated string; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_young_new(spec: *const c_char, out: *mut *mut FormnormYoung) -> FormnormStatus {
    guard(|| store_handle(out, FormnormYoung(YoungFunction::parse(text(spec, "spec")?)?)))
}

/// # Safety
/// `young` is null or a live handle from `formnorm_young_new`.
#[no_mangle]
pub unsafe extern "C" fn formnorm_young_free(young: *mut FormnormYoung) {
    if !young.is_null() {
        drop(Box::from_raw(young));
    }
}

/// Form on `domain` from a spec such as `poly:x1`, `const:dx1`,
/// `form:1:x2;x1` or `corpus:trigonometric`. The form keeps its own copy
/// of the domain.
///
/// # Safety
/// `domain` is a live handle, `spec` a NUL-terminated string, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_form_new(
    domain: *const FormnormDomain,
    spec: *const c_char,
    out: *mut *mut FormnormForm,
) -> FormnormStatus {
    guard(|| {
        let d = borrow(domain, "domain")?;
        store_handle(out, FormnormForm(build_form(text(spec, "spec")?, &d.0)?))
    })
}

/// # Safety
/// `form` is null or a live handle from `formnorm_form_new`.
#[no_mangle]
pub unsafe extern "C" fn formnorm_form_free(form: *mut FormnormForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

/// Degree and number of coefficients of a form.
///
/// # Safety
/// `form` is a live handle; the outputs are writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_form_shape(
    form: *const FormnormForm,
    degree: *mut usize,
    coefficients: *mut usize,
) -> FormnormStatus {
    guard(|| {
        let u = &borrow(form, "form")?.0;
        store(degree, u.degree())?;
        store(coefficients, u.len())
    })
}

/// Coefficients of the form at `x`, in increasing multi-index order.
/// `written` receives the coefficient count even when the buffer is too
/// small.
///
/// # Safety
/// `x` points to `dims` doubles, `coeffs` to `capacity` doubles, `written`
/// is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_form_evaluate(
    form: *const FormnormForm,
    x: *const f64,
    dims: usize,
    coeffs: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> FormnormStatus {
    guard(|| {
        let u = &borrow(form, "form")?.0;
        if dims != u.dims() {
            return Err(Failure(
                FormnormStatus::InvalidInput,
                format!("point has {dims} coordinates, form lives in {} dimensions", u.dims()),
            ));
        }
        let value = u.evaluate(coords(x, dims, "x")?)?;
        store(written, value.coeffs().len())?;
        if capacity < value.coeffs().len() {
            return Err(Failure(
                FormnormStatus::BufferTooSmall,
                format!("{} coefficients do not fit in {capacity}", value.coeffs().len()),
            ));
        }
        if coeffs.is_null() {
            return Err(null("coeffs"));
        }
        ptr::copy_nonoverlapping(value.coeffs().as_ptr(), coeffs, value.coeffs().len());
        Ok(())
    })
}

/// `‖u‖_p` over the form's domain.
///
/// # Safety
/// `form` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_lp_norm(form: *const FormnormForm, p: f64, out: *mut f64) -> FormnormStatus {
    guard(|| {
        let u = &borrow(form, "form")?.0;
        if !(p >= 1.0) {
            return Err(Failure(FormnormStatus::InvalidInput, format!("Lᵖ norm needs p ≥ 1, got {p}")));
        }
        store(out, Samples::modulus(u, u.domain(), None)?.lp(p))
    })
}

/// Luxemburg norm over the form's domain. `infinite` (optional) is set to
/// 1 when no finite λ is admissible, in which case `out` is `+∞`.
///
/// # Safety
/// `form` and `young` are live handles; `out` is writable; `infinite` is
/// null or writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_luxemburg_norm(
    form: *const FormnormForm,
    young: *const FormnormYoung,
    out: *mut f64,
    infinite: *mut c_int,
) -> FormnormStatus {
    guard(|| {
        let u = &borrow(form, "form")?.0;
        let phi = &borrow(young, "young")?.0;
        let (v, inf) = luxemburg_or_infinite(&Samples::modulus(u, u.domain(), None)?, phi)?;
        if !infinite.is_null() {
            infinite.write(c_int::from(inf));
        }
        store(out, v)
    })
}

/// L^φ-BMO or L^φ-Lipschitz norm over the first `count` balls of the
/// deterministic family with `σB ⊂ Ω`. `k` is ignored for BMO.
///
/// # Safety
/// `form` and `young` are live handles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_oscillation_norm(
    form: *const FormnormForm,
    young: *const FormnormYoung,
    kind: FormnormOscillationKind,
    k: f64,
    sigma: f64,
    count: usize,
    out: *mut f64,
) -> FormnormStatus {
    guard(|| {
        let u = &borrow(form, "form")?.0;
        let phi = &borrow(young, "young")?.0;
        let spec = match kind {
            FormnormOscillationKind::Bmo => OscillationNormSpec::bmo(sigma, count)?,
            FormnormOscillationKind::Lipschitz => OscillationNormSpec::lipschitz(k, sigma, count)?,
        };
        store(out, oscillation_norm(u, phi, &spec, None, &HomotopySettings::default())?.value)
    })
}

/// Largest coefficient of `u − d(Tu) − T(du)` on a `per_axis`ⁿ grid of
/// interior test points.
///
/// # Safety
/// `form` is a live handle; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_decomposition_residual(
    form: *const FormnormForm,
    per_axis: usize,
    out: *mut f64,
) -> FormnormStatus {
    guard(|| {
        let u = &borrow(form, "form")?.0;
        store(out, decomposition_residual(u, &HomotopySettings::default(), per_axis)?)
    })
}

/// Run the verification suite for a TOML configuration (empty string for
/// the defaults) and return the JSON report in `*json`. Returns
/// `VerificationFailed` with the report set when a verifier failed.
///
/// # Safety
/// `config_toml` is a NUL-terminated string; `json` is writable.
#[no_mangle]
pub unsafe extern "C" fn formnorm_run_suite(config_toml: *const c_char, json: *mut *mut c_char) -> FormnormStatus {
    let mut failed = false;
    let status = guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let config = RunConfig::from_toml(text(config_toml, "config_toml")?)?;
        config.validate()?;
        let report = formnorm::run_suite(&config)?;
        failed = report.status == Status::Fail;
        let s = CString::new(report.to_json()).expect("JSON has no NUL bytes");
        json.write(s.into_raw());
        Ok(())
    });
    if status == FormnormStatus::Ok && failed {
        set_error("at least one verifier failed; see the report");
        return FormnormStatus::VerificationFailed;
    }
    status
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn formnorm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
