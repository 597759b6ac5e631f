//! C ABI for `spa-core`.
//!
//! Handles are opaque pointers created by `spa_*_load`/`spa_*_from_*`/`spa_run`
//! and released with the matching `*_free`. Every fallible call returns a
//! [`SpaStatus`]; on failure, `spa_last_error` gives a message valid until the
//! next call on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use spa_core::dataset::{load_dataset, validate_for_prediction, Label, LabeledDataset, Spectrum};
use spa_core::evaluate::{Method, MethodSelector};
use spa_core::selector::OneBitProblem;
use spa_core::SpaError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaStatus {
    Ok = 0,
    NullPointer = 1,
    Parse = 2,
    MissingData = 3,
    DegenerateInput = 4,
    DegenerateObjective = 5,
    Parameter = 6,
    PipelineOrder = 7,
    UndefinedMetric = 8,
    FoldDegenerate = 9,
    Version = 10,
    Io = 11,
    TuningFailed = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaMethod {
    Spa = 0,
    Lasso = 1,
    L1Svm = 2,
}

/// Selection options. `smoothing_sigma <= 0` disables smoothing and
/// `tophat_window == 0` disables baseline removal.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpaOptions {
    pub method: SpaMethod,
    pub lambda: f64,
    pub epsilon: f64,
    pub smoothing_sigma: f64,
    pub normalize: bool,
    pub tophat_window: usize,
}

/// Opaque labeled dataset.
pub struct SpaDataset {
    inner: LabeledDataset,
}

/// Opaque selection result.
pub struct SpaResult {
    weights: Vec<f64>,
    support: Vec<usize>,
    lambda: f64,
    objective: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &SpaError) -> SpaStatus {
    match e.root() {
        SpaError::Parse { .. } => SpaStatus::Parse,
        SpaError::MissingData { .. } => SpaStatus::MissingData,
        SpaError::DegenerateInput(_) => SpaStatus::DegenerateInput,
        SpaError::DegenerateObjective => SpaStatus::DegenerateObjective,
        SpaError::Parameter(_) => SpaStatus::Parameter,
        SpaError::PipelineOrder(_) => SpaStatus::PipelineOrder,
        SpaError::UndefinedMetric(_) => SpaStatus::UndefinedMetric,
        SpaError::FoldDegenerate(_) => SpaStatus::FoldDegenerate,
        SpaError::Version { .. } => SpaStatus::Version,
        SpaError::Io { .. } => SpaStatus::Io,
        SpaError::Stage { .. } => unreachable!("root() strips stage tags"),
    }
}

fn fail(status: SpaStatus, msg: &str) -> SpaStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> SpaStatus>(f: F) -> SpaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == SpaStatus::Ok {
                set_error("");
            }
            s
        }
        Err(_) => fail(SpaStatus::Panic, "internal panic"),
    }
}

fn from_core(e: SpaError) -> SpaStatus {
    fail(status_of(&e), &e.to_string())
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `spa_*` call on this thread.
#[no_mangle]
pub extern "C" fn spa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn spa_options_default(method: SpaMethod) -> SpaOptions {
    let sel = MethodSelector::new(method_of(method));
    SpaOptions {
        method,
        lambda: sel.lambda,
        epsilon: sel.epsilon,
        smoothing_sigma: sel.preprocess.smoothing_sigma.unwrap_or(0.0),
        normalize: sel.preprocess.normalize,
        tophat_window: sel.preprocess.tophat_window.unwrap_or(0),
    }
}

fn method_of(m: SpaMethod) -> Method {
    match m {
        SpaMethod::Spa => Method::Spa,
        SpaMethod::Lasso => Method::Lasso,
        SpaMethod::L1Svm => Method::L1Svm,
    }
}

/// Reads a dataset CSV. On success `*out` owns a new handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spa_dataset_load_csv(
    path: *const c_char,
    out: *mut *mut SpaDataset,
) -> SpaStatus {
    guard(|| {
        if path.is_null() || out.is_null() {
            return fail(SpaStatus::NullPointer, "null argument");
        }
        let Ok(path) = CStr::from_ptr(path).to_str() else {
            return fail(SpaStatus::Parameter, "path is not valid UTF-8");
        };
        match load_dataset(path) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(SpaDataset { inner: ds }));
                SpaStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Builds a dataset from a row-major `n x d` matrix and `n` labels in
/// {+1, -1}. Channels are numbered 1..=d.
///
/// # Safety
/// `data` must hold `n * d` doubles, `labels` `n` ints, `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn spa_dataset_from_arrays(
    data: *const f64,
    n: usize,
    d: usize,
    labels: *const i32,
    out: *mut *mut SpaDataset,
) -> SpaStatus {
    guard(|| {
        if data.is_null() || labels.is_null() || out.is_null() {
            return fail(SpaStatus::NullPointer, "null argument");
        }
        if n == 0 || d == 0 {
            return fail(SpaStatus::Parameter, "n and d must be positive");
        }
        let Some(len) = n.checked_mul(d) else {
            return fail(SpaStatus::Parameter, "n * d overflows");
        };
        let values = std::slice::from_raw_parts(data, len);
        let mut ys = Vec::with_capacity(n);
        for (i, &l) in std::slice::from_raw_parts(labels, n).iter().enumerate() {
            ys.push(match l {
                1 => Label::Positive,
                -1 => Label::Negative,
                other => {
                    return fail(
                        SpaStatus::Parameter,
                        &format!("label {i} is {other}, expected +1 or -1"),
                    )
                }
            });
        }
        let rows: Vec<Vec<f64>> = values.chunks(d).map(<[f64]>::to_vec).collect();
        match LabeledDataset::from_rows(&rows, ys) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(SpaDataset { inner: ds }));
                SpaStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `ds` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn spa_dataset_n(ds: *const SpaDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n())
}

/// # Safety
/// `ds` must be null or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn spa_dataset_d(ds: *const SpaDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.d())
}

/// # Safety
/// `ds` must be null or a handle from this library, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spa_dataset_free(ds: *mut SpaDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

fn selector_from(opts: &SpaOptions, target: Option<usize>) -> MethodSelector {
    let mut sel = MethodSelector::new(method_of(opts.method));
    sel.lambda = opts.lambda;
    sel.epsilon = opts.epsilon;
    sel.preprocess.smoothing_sigma = (opts.smoothing_sigma > 0.0).then_some(opts.smoothing_sigma);
    sel.preprocess.normalize = opts.normalize;
    sel.preprocess.tophat_window = (opts.tophat_window > 0).then_some(opts.tophat_window);
    sel.target_k = target;
    sel
}

unsafe fn run_with(
    ds: *const SpaDataset,
    opts: *const SpaOptions,
    target: Option<usize>,
    out: *mut *mut SpaResult,
) -> SpaStatus {
    let (Some(ds), Some(opts)) = (ds.as_ref(), opts.as_ref()) else {
        return fail(SpaStatus::NullPointer, "null argument");
    };
    if out.is_null() {
        return fail(SpaStatus::NullPointer, "null argument");
    }
    let sel = selector_from(opts, target);
    match sel.run(&ds.inner) {
        Ok(res) => {
            if let Some(reason) = res.tune_failure {
                return fail(SpaStatus::TuningFailed, &reason);
            }
            *out = Box::into_raw(Box::new(SpaResult {
                support: res.weights.support().to_vec(),
                weights: res.weights.into_weights(),
                lambda: res.lambda_used,
                objective: res.objective,
            }));
            SpaStatus::Ok
        }
        Err(e) => from_core(e),
    }
}

/// Runs the full pipeline with the fixed `opts->lambda`.
///
/// # Safety
/// Pointers must be valid; `ds` a dataset handle.
#[no_mangle]
pub unsafe extern "C" fn spa_run(
    ds: *const SpaDataset,
    opts: *const SpaOptions,
    out: *mut *mut SpaResult,
) -> SpaStatus {
    guard(|| run_with(ds, opts, None, out))
}

/// Tunes lambda until exactly `target_k` features are selected. Returns
/// `SPA_STATUS_TUNING_FAILED` (with the bracket in the error message) if no
/// lambda gives that count.
///
/// # Safety
/// Pointers must be valid; `ds` a dataset handle.
#[no_mangle]
pub unsafe extern "C" fn spa_tune(
    ds: *const SpaDataset,
    opts: *const SpaOptions,
    target_k: usize,
    out: *mut *mut SpaResult,
) -> SpaStatus {
    guard(|| {
        if target_k == 0 {
            return fail(SpaStatus::Parameter, "target_k must be positive");
        }
        run_with(ds, opts, Some(target_k), out)
    })
}

/// # Safety
/// `res` must be null or a result handle.
#[no_mangle]
pub unsafe extern "C" fn spa_result_d(res: *const SpaResult) -> usize {
    res.as_ref().map_or(0, |r| r.weights.len())
}

/// Number of selected features.
///
/// # Safety
/// `res` must be null or a result handle.
#[no_mangle]
pub unsafe extern "C" fn spa_result_nnz(res: *const SpaResult) -> usize {
    res.as_ref().map_or(0, |r| r.support.len())
}

/// # Safety
/// `res` must be null or a result handle.
#[no_mangle]
pub unsafe extern "C" fn spa_result_lambda(res: *const SpaResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.lambda)
}

/// # Safety
/// `res` must be null or a result handle.
#[no_mangle]
pub unsafe extern "C" fn spa_result_objective(res: *const SpaResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.objective)
}

/// Copies the `d` weights into `buf` (capacity `len`).
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn spa_result_weights(
    res: *const SpaResult,
    buf: *mut f64,
    len: usize,
) -> SpaStatus {
    guard(|| {
        let Some(r) = res.as_ref() else {
            return fail(SpaStatus::NullPointer, "null result");
        };
        if buf.is_null() {
            return fail(SpaStatus::NullPointer, "null buffer");
        }
        if len < r.weights.len() {
            return fail(
                SpaStatus::BufferTooSmall,
                &format!("need {} entries", r.weights.len()),
            );
        }
        ptr::copy_nonoverlapping(r.weights.as_ptr(), buf, r.weights.len());
        SpaStatus::Ok
    })
}

/// Copies the zero-based support indices into `buf` (capacity `len`).
///
/// # Safety
/// `buf` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn spa_result_support(
    res: *const SpaResult,
    buf: *mut usize,
    len: usize,
) -> SpaStatus {
    guard(|| {
        let Some(r) = res.as_ref() else {
            return fail(SpaStatus::NullPointer, "null result");
        };
        if buf.is_null() && !r.support.is_empty() {
            return fail(SpaStatus::NullPointer, "null buffer");
        }
        if len < r.support.len() {
            return fail(
                SpaStatus::BufferTooSmall,
                &format!("need {} entries", r.support.len()),
            );
        }
        if !r.support.is_empty() {
            ptr::copy_nonoverlapping(r.support.as_ptr(), buf, r.support.len());
        }
        SpaStatus::Ok
    })
}

/// # Safety
/// `res` must be null or a result handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn spa_result_free(res: *mut SpaResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Checks that a spectrum to be classified has no missing (non-finite)
/// values; returns `SPA_STATUS_MISSING_DATA` otherwise.
///
/// # Safety
/// `x` must hold `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn spa_validate_spectrum(x: *const f64, d: usize) -> SpaStatus {
    guard(|| {
        if x.is_null() {
            return fail(SpaStatus::NullPointer, "null spectrum");
        }
        let values = std::slice::from_raw_parts(x, d).to_vec();
        let spectrum = match Spectrum::from_intensities(values) {
            Ok(s) => s,
            Err(e) => return from_core(e),
        };
        match validate_for_prediction(&spectrum) {
            Ok(()) => SpaStatus::Ok,
            Err(e) => from_core(e),
        }
    })
}

/// Solves `max <c, w>` subject to `||w||_1 <= sqrt(lambda)`, `||w||_2 <= 1`
/// for a given correlation vector, writing `w` (length `d`) and the optimum.
///
/// # Safety
/// `c` and `omega_out` must hold `d` doubles; `objective_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn spa_onebit_select(
    c: *const f64,
    d: usize,
    lambda: f64,
    omega_out: *mut f64,
    objective_out: *mut f64,
) -> SpaStatus {
    guard(|| {
        if c.is_null() || omega_out.is_null() {
            return fail(SpaStatus::NullPointer, "null argument");
        }
        let c = std::slice::from_raw_parts(c, d).to_vec();
        let solved = OneBitProblem::new(c).and_then(|p| p.solve(lambda, 1e-10));
        match solved {
            Ok(sol) => {
                ptr::copy_nonoverlapping(sol.omega.weights().as_ptr(), omega_out, d);
                if !objective_out.is_null() {
                    *objective_out = sol.objective;
                }
                SpaStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}
