//! C interface to `trapspec`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_sample`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`TrapspecStatus`]; on failure the message is kept per thread
//! and can be copied out with [`trapspec_last_error_message`]. Panics never
//! unwind into C: they are caught and reported as `TRAPSPEC_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use trapspec::correlation::{aging_function, pi_spectral, CorrelationQuery};
use trapspec::montecarlo::{mc_pi, McConfig};
use trapspec::spectral::compute_spectrum;
use trapspec::{EnergyLandscape, Error, LandscapeConfig, SpectralDecomposition};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapspecStatus {
    Ok = 0,
    /// A parameter is out of range.
    InvalidArgument = 1,
    /// A required pointer was null.
    NullPointer = 2,
    /// An iterative or quadrature scheme failed.
    Numerical = 3,
    /// The caller's buffer is shorter than the data.
    BufferTooSmall = 4,
    /// An internal panic was caught.
    Panic = 5,
}

/// A sampled or user-supplied energy landscape.
pub struct TrapspecLandscape {
    inner: EnergyLandscape,
}

/// Eigenvalues and spectral weights of a landscape's generator.
pub struct TrapspecSpectrum {
    inner: SpectralDecomposition,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> TrapspecStatus {
    if e.is_numerical() {
        TrapspecStatus::Numerical
    } else {
        TrapspecStatus::InvalidArgument
    }
}

/// Runs `f`, recording its error and converting panics.
fn guard<F: FnOnce() -> Result<(), (TrapspecStatus, String)>>(f: F) -> TrapspecStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            TrapspecStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            TrapspecStatus::Panic
        }
    }
}

fn lib<T>(r: trapspec::Result<T>) -> Result<T, (TrapspecStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (TrapspecStatus, String) {
    (TrapspecStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `out`, if non-null, must be valid for a write of `len` doubles.
unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (TrapspecStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err((TrapspecStatus::BufferTooSmall, format!("buffer holds {len} values, need {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn trapspec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated and
/// NUL-terminated) and returns the full message length excluding the NUL.
/// Returns 0 when the last call on this thread succeeded.
///
/// # Safety
/// `buf` must be null or valid for writes of `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn trapspec_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            if !buf.is_null() && len > 0 {
                *buf = 0;
            }
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Draws a landscape of `n` sites with exponent `alpha` from `seed`.
///
/// # Safety
/// `out` must be valid for a pointer write. The handle stored there must be
/// released with [`trapspec_landscape_free`].
#[no_mangle]
pub unsafe extern "C" fn trapspec_landscape_sample(
    alpha: f64,
    n: usize,
    seed: u64,
    out: *mut *mut TrapspecLandscape,
) -> TrapspecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = lib(trapspec::landscape::sample_landscape(&LandscapeConfig::new(alpha, n, seed)))?;
        *out = Box::into_raw(Box::new(TrapspecLandscape { inner }));
        Ok(())
    })
}

/// Builds a landscape from `len` rates in `(0, 1]` (any order).
///
/// # Safety
/// `rates` must be valid for reads of `len` doubles and `out` for a pointer
/// write. Release the handle with [`trapspec_landscape_free`].
#[no_mangle]
pub unsafe extern "C" fn trapspec_landscape_from_rates(
    rates: *const f64,
    len: usize,
    out: *mut *mut TrapspecLandscape,
) -> TrapspecStatus {
    guard(|| {
        if rates.is_null() {
            return Err(null("rates"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = std::slice::from_raw_parts(rates, len).to_vec();
        let inner = lib(EnergyLandscape::from_rates(v))?;
        *out = Box::into_raw(Box::new(TrapspecLandscape { inner }));
        Ok(())
    })
}

/// Number of sites, or 0 for a null handle.
///
/// # Safety
/// `landscape` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trapspec_landscape_len(landscape: *const TrapspecLandscape) -> usize {
    landscape.as_ref().map_or(0, |l| l.inner.len())
}

/// Copies the rates, sorted increasing, into `out`.
///
/// # Safety
/// `landscape` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trapspec_landscape_rates(
    landscape: *const TrapspecLandscape,
    out: *mut f64,
    len: usize,
) -> TrapspecStatus {
    guard(|| {
        let l = landscape.as_ref().ok_or_else(|| null("landscape"))?;
        copy_out(l.inner.rates(), out, len)
    })
}

/// Releases a landscape. Null is ignored.
///
/// # Safety
/// `landscape` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trapspec_landscape_free(landscape: *mut TrapspecLandscape) {
    if !landscape.is_null() {
        drop(Box::from_raw(landscape));
    }
}

/// Computes the spectrum of a landscape with root tolerance `tol`.
///
/// # Safety
/// `landscape` must be a live handle and `out` valid for a pointer write.
/// Release the result with [`trapspec_spectrum_free`].
#[no_mangle]
pub unsafe extern "C" fn trapspec_spectrum_compute(
    landscape: *const TrapspecLandscape,
    tol: f64,
    out: *mut *mut TrapspecSpectrum,
) -> TrapspecStatus {
    guard(|| {
        let l = landscape.as_ref().ok_or_else(|| null("landscape"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = lib(compute_spectrum(&l.inner, tol))?;
        *out = Box::into_raw(Box::new(TrapspecSpectrum { inner }));
        Ok(())
    })
}

/// Number of eigenvalues, or 0 for a null handle.
///
/// # Safety
/// `spectrum` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn trapspec_spectrum_len(spectrum: *const TrapspecSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.inner.len())
}

/// Copies the eigenvalues, sorted increasing.
///
/// # Safety
/// `spectrum` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trapspec_spectrum_eigenvalues(
    spectrum: *const TrapspecSpectrum,
    out: *mut f64,
    len: usize,
) -> TrapspecStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        copy_out(s.inner.eigenvalues(), out, len)
    })
}

/// Copies the spectral weights in eigenvalue order.
///
/// # Safety
/// `spectrum` must be a live handle and `out` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn trapspec_spectrum_weights(
    spectrum: *const TrapspecSpectrum,
    out: *mut f64,
    len: usize,
) -> TrapspecStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        copy_out(s.inner.weights(), out, len)
    })
}

/// Releases a spectrum. Null is ignored.
///
/// # Safety
/// `spectrum` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn trapspec_spectrum_free(spectrum: *mut TrapspecSpectrum) {
    if !spectrum.is_null() {
        drop(Box::from_raw(spectrum));
    }
}

/// Probability of no jump in `(t_w, t_w + t]` from the uniform start.
///
/// # Safety
/// `spectrum` must be a live handle and `out` valid for a write.
#[no_mangle]
pub unsafe extern "C" fn trapspec_pi(
    spectrum: *const TrapspecSpectrum,
    t: f64,
    t_w: f64,
    out: *mut f64,
) -> TrapspecStatus {
    guard(|| {
        let s = spectrum.as_ref().ok_or_else(|| null("spectrum"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let q = lib(CorrelationQuery::new(t, t_w))?;
        *out = lib(pi_spectral(&s.inner, q))?;
        Ok(())
    })
}

/// Monte Carlo estimate of the same probability with its standard error.
///
/// # Safety
/// `landscape` must be a live handle; `estimate` and `stderr` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn trapspec_pi_monte_carlo(
    landscape: *const TrapspecLandscape,
    t: f64,
    t_w: f64,
    replicas: usize,
    seed: u64,
    estimate: *mut f64,
    stderr: *mut f64,
) -> TrapspecStatus {
    guard(|| {
        let l = landscape.as_ref().ok_or_else(|| null("landscape"))?;
        if estimate.is_null() || stderr.is_null() {
            return Err(null("estimate or stderr"));
        }
        let q = lib(CorrelationQuery::new(t, t_w))?;
        let e = lib(mc_pi(&l.inner, q, &McConfig::new(replicas, seed)))?;
        *estimate = e.estimate;
        *stderr = e.stderr;
        Ok(())
    })
}

/// Large-system limit of the correlation at ratio `theta = t/t_w`.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn trapspec_aging_function(alpha: f64, theta: f64, out: *mut f64) -> TrapspecStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = lib(aging_function(alpha, theta))?;
        Ok(())
    })
}
