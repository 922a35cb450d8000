//! C ABI for the `varloc` localization library.
//!
//! Scenarios live behind an opaque `VarlocScenario` handle created by
//! `varloc_scenario_new` or `varloc_scenario_from_json` and released with
//! `varloc_scenario_free`. Every fallible call returns a `VarlocStatus`; on
//! failure a description is kept per thread and can be copied out with
//! `varloc_last_error_message`. Panics never cross the boundary.
//!
//! The header `include/varloc.h` is generated from this file by the build
//! script.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use varloc::baselines::{gd_rls, srls};
use varloc::solver::{oracle_grid, rpte};
use varloc::{Error, Estimate, Point2, Provenance, Scenario};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarlocStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument was outside the operation's domain.
    InvalidArgument = 2,
    /// The data admit no estimate from the requested solver.
    Degenerate = 3,
    /// The request exceeds a computation budget.
    ResourceLimit = 4,
    /// Malformed JSON or text encoding.
    Parse = 5,
    Io = 6,
    /// An internal invariant failed; the call had no effect.
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarlocProvenanceKind {
    Singleton = 0,
    Circle = 1,
    Ellipse = 2,
    HalfHyperbola = 3,
    Oracle = 4,
    Baseline = 5,
}

/// A location estimate.
///
/// `index_a`/`index_b` hold the anchor (singleton, circle), the anchor pair
/// (ellipse, half-hyperbola) or the lattice row/column (oracle); unused
/// fields are zero. `grid_index` is the curve sample index where relevant.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarlocEstimate {
    pub x_km: f64,
    pub y_km: f64,
    pub objective_km: f64,
    pub kind: VarlocProvenanceKind,
    pub index_a: usize,
    pub index_b: usize,
    pub grid_index: usize,
}

impl From<&Estimate> for VarlocEstimate {
    fn from(e: &Estimate) -> Self {
        use VarlocProvenanceKind as K;
        let (kind, index_a, index_b, grid_index) = match e.provenance {
            Provenance::Singleton { anchor } => (K::Singleton, anchor, 0, 0),
            Provenance::Circle { anchor, grid_index } => (K::Circle, anchor, 0, grid_index),
            Provenance::Ellipse { i, j, grid_index } => (K::Ellipse, i, j, grid_index),
            Provenance::HalfHyperbola { i, j, grid_index } => (K::HalfHyperbola, i, j, grid_index),
            Provenance::Oracle { row, col } => (K::Oracle, row, col, 0),
            Provenance::Baseline { .. } => (K::Baseline, 0, 0, 0),
        };
        Self {
            x_km: e.point.x,
            y_km: e.point.y,
            objective_km: e.objective,
            kind,
            index_a,
            index_b,
            grid_index,
        }
    }
}

/// Opaque scenario handle.
pub struct VarlocScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> VarlocStatus {
    match err {
        Error::Domain(_) | Error::Config(_) => VarlocStatus::InvalidArgument,
        Error::DegeneratePair { .. } | Error::SolverDegenerate(_) => VarlocStatus::Degenerate,
        Error::Resource { .. } => VarlocStatus::ResourceLimit,
        Error::Json(_) => VarlocStatus::Parse,
        Error::Io { .. } => VarlocStatus::Io,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (VarlocStatus, String)>) -> VarlocStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error(String::new());
            VarlocStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal error: {msg}"));
            VarlocStatus::Panic
        }
    }
}

fn lib_err(err: Error) -> (VarlocStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (VarlocStatus, String) {
    (VarlocStatus::NullPointer, format!("{what} is NULL"))
}

/// Borrows the scenario behind a handle.
///
/// # Safety
/// `handle` must be NULL or a live pointer from this library.
unsafe fn scenario_ref<'a>(handle: *const VarlocScenario) -> Result<&'a Scenario, (VarlocStatus, String)> {
    handle.as_ref().map(|h| &h.inner).ok_or_else(|| null("scenario"))
}

/// Creates a scenario from `m` anchors given as interleaved `x, y` pairs
/// (`2 m` doubles, km), `m` measurements (km) and the outlier count.
///
/// # Safety
/// `anchors_xy` must point to `2 * m` doubles and `measurements` to `m`
/// doubles; `out` must be writable. On success `*out` owns a new handle.
#[no_mangle]
pub unsafe extern "C" fn varloc_scenario_new(
    anchors_xy: *const f64,
    measurements: *const f64,
    m: usize,
    outlier_count: usize,
    out: *mut *mut VarlocScenario,
) -> VarlocStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if anchors_xy.is_null() {
            return Err(null("anchors_xy"));
        }
        if measurements.is_null() {
            return Err(null("measurements"));
        }
        let xy = std::slice::from_raw_parts(anchors_xy, 2 * m);
        let ys = std::slice::from_raw_parts(measurements, m);
        let anchors = xy.chunks_exact(2).map(|p| Point2::new(p[0], p[1])).collect();
        let scenario = Scenario::new(anchors, ys.to_vec(), outlier_count).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(VarlocScenario { inner: scenario }));
        Ok(())
    })
}

/// Parses a scenario from a NUL-terminated UTF-8 JSON document of the form
/// `{"anchors": [[x, y], ...], "measurements": [...], "outlier_count": L}`.
///
/// # Safety
/// `json` must be a valid C string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn varloc_scenario_from_json(
    json: *const c_char,
    out: *mut *mut VarlocScenario,
) -> VarlocStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (VarlocStatus::Parse, format!("json is not UTF-8: {e}")))?;
        let scenario = Scenario::from_json_str(text).map_err(|e| match e {
            Error::Json(ref inner) if inner.is_data() => {
                // Validation failures surface through serde as data errors.
                (VarlocStatus::InvalidArgument, e.to_string())
            }
            other => lib_err(other),
        })?;
        *out = Box::into_raw(Box::new(VarlocScenario { inner: scenario }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `handle` must be NULL or a pointer from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn varloc_scenario_free(handle: *mut VarlocScenario) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of anchors, or 0 for NULL.
///
/// # Safety
/// `handle` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn varloc_scenario_len(handle: *const VarlocScenario) -> usize {
    handle.as_ref().map_or(0, |h| h.inner.len())
}

/// Percentile objective of the scenario at `(x_km, y_km)`.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn varloc_objective(
    handle: *const VarlocScenario,
    x_km: f64,
    y_km: f64,
    out: *mut f64,
) -> VarlocStatus {
    guard(|| {
        let s = scenario_ref(handle)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = Point2::new(x_km, y_km);
        if !p.is_finite() {
            return Err((VarlocStatus::InvalidArgument, format!("point {p} is not finite")));
        }
        *out = varloc::objective(p, s);
        Ok(())
    })
}

/// `(L+1)`-th largest of `len` values.
///
/// # Safety
/// `values` must point to `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn varloc_percentile(
    values: *const f64,
    len: usize,
    outlier_count: usize,
    out: *mut f64,
) -> VarlocStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let z: &[f64] = if len == 0 {
            &[]
        } else if values.is_null() {
            return Err(null("values"));
        } else {
            std::slice::from_raw_parts(values, len)
        };
        *out = varloc::percentile(z, outlier_count).map_err(lib_err)?;
        Ok(())
    })
}

unsafe fn write_estimate(
    handle: *const VarlocScenario,
    out: *mut VarlocEstimate,
    solve: impl FnOnce(&Scenario) -> Result<Estimate, Error>,
) -> VarlocStatus {
    guard(|| {
        let s = scenario_ref(handle)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let estimate = solve(s).map_err(lib_err)?;
        ptr::write(out, VarlocEstimate::from(&estimate));
        Ok(())
    })
}

/// Robust percentile estimate with `grid` samples per curve (`grid >= 2`).
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn varloc_rpte(
    handle: *const VarlocScenario,
    grid: usize,
    out: *mut VarlocEstimate,
) -> VarlocStatus {
    write_estimate(handle, out, |s| rpte(s, grid))
}

/// Squared-range least-squares estimate.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn varloc_srls(handle: *const VarlocScenario, out: *mut VarlocEstimate) -> VarlocStatus {
    write_estimate(handle, out, srls)
}

/// Gradient-descent range least-squares estimate.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn varloc_gd(
    handle: *const VarlocScenario,
    max_iters: usize,
    grad_tol: f64,
    out: *mut VarlocEstimate,
) -> VarlocStatus {
    write_estimate(handle, out, |s| {
        if !(grad_tol >= 0.0) {
            return Err(Error::Domain(format!("grad_tol must be >= 0, got {grad_tol}")));
        }
        Ok(gd_rls(s, max_iters, grad_tol))
    })
}

/// Dense lattice search with pitch `pitch_km` over the default box.
///
/// # Safety
/// `handle` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn varloc_oracle_grid(
    handle: *const VarlocScenario,
    pitch_km: f64,
    out: *mut VarlocEstimate,
) -> VarlocStatus {
    write_estimate(handle, out, |s| oracle_grid(s, pitch_km))
}

/// Copies the calling thread's last error message into `buf` as a
/// NUL-terminated string, truncating to `len - 1` bytes. Returns the full
/// message length in bytes (excluding the NUL), so a return value `>= len`
/// means the copy was truncated. `buf` may be NULL when `len` is 0.
///
/// # Safety
/// `buf` must be writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn varloc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn varloc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
