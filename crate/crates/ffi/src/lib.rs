//! C ABI over the `listdec` estimator.
//!
//! Every fallible call returns a [`ListdecStatus`]; on failure a message is
//! kept per thread and readable through [`listdec_last_error_message`].
//! Results live behind an opaque [`ListdecResult`] handle that the caller
//! releases with [`listdec_result_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use listdec::estimator::{covariance_list_decoding, Estimate, EstimatorConfig};
use listdec::{Error, Points};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ListdecStatus {
    Ok = 0,
    NullPointer = 1,
    /// Bad sizes, a malformed string, or an index past the end.
    InvalidArgument = 2,
    /// The configuration was rejected.
    InvalidConfig = 3,
    /// The estimator failed on this input.
    Numerical = 4,
    /// A caller buffer is shorter than the data.
    BufferTooSmall = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Hypothesis list and trace of one estimator run.
pub struct ListdecResult {
    dim: usize,
    estimate: Estimate,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let s = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(s));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: ListdecStatus, msg: impl Into<String>) -> ListdecStatus {
    set_error(msg);
    status
}

fn from_error(e: &Error) -> ListdecStatus {
    let status = if e.is_validation() { ListdecStatus::InvalidConfig } else { ListdecStatus::Numerical };
    fail(status, format!("{}: {e}", e.kind()))
}

/// Runs `f`, turning a panic into [`ListdecStatus::Panic`].
fn guard(f: impl FnOnce() -> ListdecStatus) -> ListdecStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(ListdecStatus::Panic, format!("panic: {msg}"))
        }
    }
}

/// Reads `m·d` row-major doubles.
unsafe fn read_points(points: *const f64, m: usize, d: usize) -> Result<Points, ListdecStatus> {
    if d == 0 {
        return Err(fail(ListdecStatus::InvalidArgument, "dimension must be positive"));
    }
    let Some(len) = m.checked_mul(d) else {
        return Err(fail(ListdecStatus::InvalidArgument, "m * d overflows"));
    };
    if points.is_null() {
        return Err(fail(ListdecStatus::NullPointer, "points is null"));
    }
    let data = std::slice::from_raw_parts(points, len).to_vec();
    Points::new(d, data).map_err(|e| from_error(&e))
}

fn run(points: Points, config: &EstimatorConfig, out: *mut *mut ListdecResult) -> ListdecStatus {
    let dim = points.dim();
    match covariance_list_decoding(&points, config) {
        Ok(estimate) => {
            // SAFETY: `out` was checked non-null by the caller of `run`.
            unsafe { *out = Box::into_raw(Box::new(ListdecResult { dim, estimate })) };
            ListdecStatus::Ok
        }
        Err(e) => from_error(&e),
    }
}

/// Runs the estimator with default settings for inlier fraction `alpha`.
///
/// `points` holds `m` rows of `d` doubles, row-major. On success `*out`
/// receives a new handle; on failure it is set to null.
///
/// # Safety
/// `points` must be valid for `m·d` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn listdec_estimate(
    points: *const f64,
    m: usize,
    d: usize,
    alpha: f64,
    seed: u64,
    out: *mut *mut ListdecResult,
) -> ListdecStatus {
    guard(|| {
        if out.is_null() {
            return fail(ListdecStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        let config = EstimatorConfig::new(alpha).with_seed(seed);
        if let Err(e) = config.validate() {
            return from_error(&e);
        }
        match read_points(points, m, d) {
            Ok(p) => run(p, &config, out),
            Err(s) => s,
        }
    })
}

/// Like [`listdec_estimate`] but takes the full estimator configuration as a
/// NUL-terminated JSON object (the `estimator` block of an experiment config).
///
/// # Safety
/// As for [`listdec_estimate`]; `config_json` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn listdec_estimate_with_config(
    points: *const f64,
    m: usize,
    d: usize,
    config_json: *const c_char,
    out: *mut *mut ListdecResult,
) -> ListdecStatus {
    guard(|| {
        if out.is_null() {
            return fail(ListdecStatus::NullPointer, "out is null");
        }
        *out = ptr::null_mut();
        if config_json.is_null() {
            return fail(ListdecStatus::NullPointer, "config_json is null");
        }
        let Ok(text) = CStr::from_ptr(config_json).to_str() else {
            return fail(ListdecStatus::InvalidArgument, "config_json is not UTF-8");
        };
        let config: EstimatorConfig = match serde_json::from_str(text) {
            Ok(c) => c,
            Err(e) => return fail(ListdecStatus::InvalidConfig, format!("json: {e}")),
        };
        if let Err(e) = config.validate() {
            return from_error(&e);
        }
        match read_points(points, m, d) {
            Ok(p) => run(p, &config, out),
            Err(s) => s,
        }
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `result` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn listdec_result_free(result: *mut ListdecResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of hypotheses, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn listdec_result_len(result: *const ListdecResult) -> usize {
    result.as_ref().map_or(0, |r| r.estimate.hypotheses.len())
}

/// Point dimension `d`, or 0 for a null handle.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn listdec_result_dim(result: *const ListdecResult) -> usize {
    result.as_ref().map_or(0, |r| r.dim)
}

unsafe fn hypothesis<'a>(
    result: *const ListdecResult,
    k: usize,
) -> Result<&'a listdec::estimator::Hypothesis, ListdecStatus> {
    let r = result.as_ref().ok_or_else(|| fail(ListdecStatus::NullPointer, "result is null"))?;
    r.estimate
        .hypotheses
        .get(k)
        .ok_or_else(|| fail(ListdecStatus::InvalidArgument, format!("hypothesis {k} of {}", r.estimate.hypotheses.len())))
}

/// Writes the number of points in hypothesis `k` to `*size`.
///
/// # Safety
/// `result` must be a live handle and `size` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn listdec_hypothesis_size(result: *const ListdecResult, k: usize, size: *mut usize) -> ListdecStatus {
    guard(|| {
        if size.is_null() {
            return fail(ListdecStatus::NullPointer, "size is null");
        }
        match hypothesis(result, k) {
            Ok(h) => {
                *size = h.size();
                ListdecStatus::Ok
            }
            Err(s) => s,
        }
    })
}

/// Copies the ascending point indices of hypothesis `k` into `buf`, which
/// must hold at least `listdec_hypothesis_size` entries.
///
/// # Safety
/// `buf` must be valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn listdec_hypothesis_indices(
    result: *const ListdecResult,
    k: usize,
    buf: *mut usize,
    cap: usize,
) -> ListdecStatus {
    guard(|| {
        let h = match hypothesis(result, k) {
            Ok(h) => h,
            Err(s) => return s,
        };
        copy_out(&h.indices, buf, cap)
    })
}

/// Copies the `d x d` covariance estimate of hypothesis `k`, row-major, into
/// `buf`, which must hold at least `d²` doubles.
///
/// # Safety
/// `buf` must be valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn listdec_hypothesis_covariance(
    result: *const ListdecResult,
    k: usize,
    buf: *mut f64,
    cap: usize,
) -> ListdecStatus {
    guard(|| {
        let h = match hypothesis(result, k) {
            Ok(h) => h,
            Err(s) => return s,
        };
        copy_out(h.h_matrix.as_slice(), buf, cap)
    })
}

unsafe fn copy_out<T: Copy>(src: &[T], buf: *mut T, cap: usize) -> ListdecStatus {
    if buf.is_null() && !src.is_empty() {
        return fail(ListdecStatus::NullPointer, "buf is null");
    }
    if cap < src.len() {
        return fail(ListdecStatus::BufferTooSmall, format!("need {} entries, got {cap}", src.len()));
    }
    if !src.is_empty() {
        ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    }
    ListdecStatus::Ok
}

/// The recursion trace as a newly allocated JSON string, or null on failure.
/// Release it with [`listdec_string_free`].
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn listdec_result_trace_json(result: *const ListdecResult) -> *mut c_char {
    let mut out = ptr::null_mut();
    guard(|| {
        let Some(r) = result.as_ref() else {
            return fail(ListdecStatus::NullPointer, "result is null");
        };
        match serde_json::to_string(&r.estimate.trace) {
            Ok(s) => {
                out = CString::new(s).map_or(ptr::null_mut(), CString::into_raw);
                ListdecStatus::Ok
            }
            Err(e) => fail(ListdecStatus::Numerical, format!("json: {e}")),
        }
    });
    out
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn listdec_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message for the last failure on this thread, or null if the last call
/// succeeded. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn listdec_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn listdec_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
