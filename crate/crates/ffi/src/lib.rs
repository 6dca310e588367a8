//! C interface to `colorcount`.
//!
//! Objects are opaque handles created by `cc_*` constructors and released
//! with the matching `cc_*_free`. Fallible calls return a [`CcStatus`]; on
//! failure [`cc_last_error`] describes what went wrong on the calling thread.
//! Methods and patterns are passed by name, e.g. `"gmm-bic"` or `"bars"`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use colorcount::synthgen::{self, Pattern, SynthSpec};
use colorcount::{CountEstimate, CountOptions, Error, Method, PixelSamples, ScoreCurve};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcStatus {
    CcOk = 0,
    /// A required pointer was null.
    CcErrNull = 1,
    CcErrInvalidArgument = 2,
    CcErrUnknownMethod = 3,
    CcErrIo = 4,
    /// Unreadable or unsupported image data.
    CcErrDecode = 5,
    /// Fitting or sampling failed, or the request cannot be satisfied.
    CcErrComputation = 6,
    CcErrPanic = 7,
}

pub struct CcSamples(PixelSamples);
pub struct CcEstimate(CountEstimate);
pub struct CcCurve(ScoreCurve);

/// Sweep and count settings. Obtain defaults from [`cc_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CcOptions {
    pub k_max: usize,
    pub seed: u64,
    pub js_samples: usize,
}

impl From<&CcOptions> for CountOptions {
    fn from(o: &CcOptions) -> Self {
        CountOptions {
            k_max: o.k_max,
            seed: o.seed,
            js_samples: o.js_samples,
            ..CountOptions::default()
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(CcStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => CcStatus::CcErrInvalidArgument,
            Error::UnknownMethod(_) => CcStatus::CcErrUnknownMethod,
            Error::Io { .. } | Error::Encode(_) | Error::Manifest { .. } => CcStatus::CcErrIo,
            Error::Decode { .. }
            | Error::UnsupportedFormat { .. }
            | Error::UnsupportedBitDepth { .. }
            | Error::UnsupportedColorspace { .. } => CcStatus::CcErrDecode,
            Error::InvalidSamples(_) => CcStatus::CcErrInvalidArgument,
            Error::TooFewSamples { .. } | Error::FitFailed(_) | Error::NonFiniteDensity | Error::InfeasibleSpec(_) => {
                CcStatus::CcErrComputation
            }
        };
        Failure(status, e.to_string())
    }
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CcStatus::CcOk,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CcStatus::CcErrPanic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(CcStatus::CcErrNull, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(CcStatus::CcErrInvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn emit<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn options(p: *const CcOptions) -> CountOptions {
    p.as_ref().map(CountOptions::from).unwrap_or_default()
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn cc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn cc_options_default() -> CcOptions {
    let d = CountOptions::default();
    CcOptions {
        k_max: d.k_max,
        seed: d.seed,
        js_samples: d.js_samples,
    }
}

/// Decodes a PNG or JPEG file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_samples_decode(path: *const c_char, out: *mut *mut CcSamples) -> CcStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        emit(out, CcSamples(colorcount::decode_image(path)?))
    })
}

/// Wraps `width * height` interleaved 8-bit RGB pixels in row-major order.
///
/// # Safety
/// `rgb` must point to `3 * width * height` readable bytes.
#[no_mangle]
pub unsafe extern "C" fn cc_samples_from_rgb8(
    rgb: *const u8,
    width: usize,
    height: usize,
    out: *mut *mut CcSamples,
) -> CcStatus {
    guard(|| {
        if rgb.is_null() {
            return Err(null("rgb"));
        }
        let len = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| Failure(CcStatus::CcErrInvalidArgument, "image size overflows".into()))?;
        let bytes = std::slice::from_raw_parts(rgb, len);
        emit(out, CcSamples(PixelSamples::from_rgb8(width, height, bytes)?))
    })
}

/// Renders a synthetic image with the default separation and truncation.
///
/// # Safety
/// `pattern` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_synth(
    pattern: *const c_char,
    k: usize,
    width: usize,
    height: usize,
    seed: u64,
    noise_sigma: f64,
    out: *mut *mut CcSamples,
) -> CcStatus {
    guard(|| {
        let pattern: Pattern = str_arg(pattern, "pattern")?.parse()?;
        let spec = SynthSpec {
            palette_seed: seed,
            noise_sigma,
            ..SynthSpec::new(pattern, k, width, height)
        };
        emit(out, CcSamples(synthgen::generate(&spec)?.image))
    })
}

/// # Safety
/// `samples` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cc_samples_write_png(samples: *const CcSamples, path: *const c_char) -> CcStatus {
    guard(|| {
        let samples = handle(samples, "samples")?;
        let path = str_arg(path, "path")?;
        Ok(samples.0.write_png(Path::new(path))?)
    })
}

/// Pixel count; 0 for a null handle.
///
/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_samples_len(samples: *const CcSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.0.len())
}

/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_samples_width(samples: *const CcSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.0.width())
}

/// # Safety
/// `samples` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_samples_height(samples: *const CcSamples) -> usize {
    samples.as_ref().map_or(0, |s| s.0.height())
}

/// # Safety
/// `samples` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cc_samples_free(samples: *mut CcSamples) {
    if !samples.is_null() {
        drop(Box::from_raw(samples));
    }
}

/// Estimates the color count. A null `options` means defaults.
///
/// # Safety
/// `samples` must be a live handle, `method` a NUL-terminated string,
/// `options` null or valid, `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_count(
    samples: *const CcSamples,
    method: *const c_char,
    options: *const CcOptions,
    out: *mut *mut CcEstimate,
) -> CcStatus {
    guard(|| {
        let samples = handle(samples, "samples")?;
        let method: Method = str_arg(method, "method")?.parse()?;
        let est = colorcount::count(&samples.0, method, &self::options(options))?;
        emit(out, CcEstimate(est))
    })
}

/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_estimate_value(estimate: *const CcEstimate) -> usize {
    estimate.as_ref().map_or(0, |e| e.0.estimate)
}

/// Score at the selected K; for `cch`, the share of pixels in counted cells.
///
/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_estimate_score(estimate: *const CcEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.0.selected_score)
}

/// # Safety
/// `estimate` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_estimate_runtime_seconds(estimate: *const CcEstimate) -> f64 {
    estimate.as_ref().map_or(f64::NAN, |e| e.0.runtime_seconds)
}

/// # Safety
/// `estimate` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cc_estimate_free(estimate: *mut CcEstimate) {
    if !estimate.is_null() {
        drop(Box::from_raw(estimate));
    }
}

/// Per-K scores of a sweep method. A null `options` means defaults.
///
/// # Safety
/// As for [`cc_count`].
#[no_mangle]
pub unsafe extern "C" fn cc_sweep(
    samples: *const CcSamples,
    method: *const c_char,
    options: *const CcOptions,
    out: *mut *mut CcCurve,
) -> CcStatus {
    guard(|| {
        let samples = handle(samples, "samples")?;
        let method: Method = str_arg(method, "method")?.parse()?;
        let curve = colorcount::sweep(&samples.0, method, &self::options(options))?;
        emit(out, CcCurve(curve))
    })
}

/// Largest K in the curve; 0 for a null handle.
///
/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_curve_len(curve: *const CcCurve) -> usize {
    curve.as_ref().map_or(0, |c| c.0.k_max())
}

/// Writes the score at `k` (1-based) to `out`.
///
/// # Safety
/// `curve` must be a live handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_curve_score(curve: *const CcCurve, k: usize, out: *mut f64) -> CcStatus {
    guard(|| {
        let curve = handle(curve, "curve")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let score = curve.0.score_at(k).ok_or_else(|| {
            Failure(
                CcStatus::CcErrInvalidArgument,
                format!("k={k} outside 1..={}", curve.0.k_max()),
            )
        })?;
        *out = score;
        Ok(())
    })
}

/// K picked from the curve by its method's selection rule; 0 for null.
///
/// # Safety
/// `curve` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cc_curve_select(curve: *const CcCurve) -> usize {
    curve.as_ref().map_or(0, |c| colorcount::select_count(&c.0).estimate)
}

/// # Safety
/// `curve` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cc_curve_free(curve: *mut CcCurve) {
    if !curve.is_null() {
        drop(Box::from_raw(curve));
    }
}
