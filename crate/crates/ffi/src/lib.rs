//! C ABI over the `tracekit` estimators.
//!
//! Operators are opaque `TkOperator` handles created by the `tk_operator_*`
//! constructors and released with [`tk_operator_free`]. Every fallible call
//! returns a [`TkStatus`]; on a non-zero status the thread-local message from
//! [`tk_last_error_message`] describes the failure. Panics never cross the
//! boundary, they are reported as [`TkStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use nalgebra::DMatrix;
use tracekit::linop::{
    dense_operator, lanczos_function_operator, power_operator, read_matrix_market, DiagonalOperator,
    MatrixFunction,
};
use tracekit::{Algorithm, Error, LinearOperator, PsdClaim, QueryDistribution, Split};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NotSymmetric = 4,
    BudgetTooSmall = 5,
    SpectrumFloor = 6,
    Io = 7,
    Parse = 8,
    Callback = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkAlgorithm {
    Hutchinson = 0,
    HutchPp = 1,
    NaHutchPp = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkDistribution {
    Gaussian = 0,
    Rademacher = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TkFunction {
    Exp = 0,
    Log = 1,
    Inverse = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TkEstimate {
    pub value: f64,
    pub algorithm: TkAlgorithm,
    /// Query columns the oracle served.
    pub m: usize,
    pub seed: u64,
    pub adaptive_rounds: usize,
}

/// Opaque operator handle.
pub struct TkOperator {
    inner: Arc<dyn LinearOperator>,
}

/// `y = A x` for one column of length `n`; return 0 on success.
pub type TkApplyFn = Option<extern "C" fn(user_data: *mut c_void, x: *const f64, y: *mut f64, n: usize) -> c_int>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> TkStatus {
    match err {
        Error::Dimension { .. } | Error::NotSquare { .. } => TkStatus::Dimension,
        Error::Asymmetric { .. } => TkStatus::NotSymmetric,
        Error::Parameter(msg) if msg.starts_with(CALLBACK_PREFIX) => TkStatus::Callback,
        Error::Parameter(_) => TkStatus::InvalidArgument,
        Error::BudgetTooSmall { .. } => TkStatus::BudgetTooSmall,
        Error::SpectrumFloor { .. } => TkStatus::SpectrumFloor,
        Error::Parse { .. } => TkStatus::Parse,
        Error::Dataset { source, .. } => status_of(source),
        Error::Io(_) | Error::Csv(_) => TkStatus::Io,
    }
}

fn guard<F>(f: F) -> TkStatus
where
    F: FnOnce() -> Result<(), (TkStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            TkStatus::Ok
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
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("panic: {msg}"));
            TkStatus::Panic
        }
    }
}

fn lift(err: Error) -> (TkStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (TkStatus, String) {
    (TkStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (TkStatus, String) {
    (TkStatus::InvalidArgument, msg.into())
}

fn psd(claim: bool) -> PsdClaim {
    if claim {
        PsdClaim::Psd
    } else {
        PsdClaim::Unknown
    }
}

unsafe fn emit(out: *mut *mut TkOperator, inner: Arc<dyn LinearOperator>) -> Result<(), (TkStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(TkOperator { inner }));
    Ok(())
}

unsafe fn operator<'a>(op: *const TkOperator) -> Result<&'a TkOperator, (TkStatus, String)> {
    op.as_ref().ok_or_else(|| null("operator"))
}

/// Dense symmetric operator from `n * n` column-major values (copied).
///
/// # Safety
/// `data` must point to `n * n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_dense(
    data: *const f64,
    n: usize,
    claim_psd: bool,
    out: *mut *mut TkOperator,
) -> TkStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let len = n.checked_mul(n).ok_or_else(|| invalid("n * n overflows"))?;
        let values = std::slice::from_raw_parts(data, len);
        let op = dense_operator(DMatrix::from_column_slice(n, n, values)).map_err(lift)?;
        emit(out, Arc::new(op.with_psd_claim(psd(claim_psd))))
    })
}

/// Diagonal operator from `n` values (copied).
///
/// # Safety
/// `diag` must point to `n` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_diagonal(diag: *const f64, n: usize, out: *mut *mut TkOperator) -> TkStatus {
    guard(|| {
        if diag.is_null() {
            return Err(null("diag"));
        }
        let values = std::slice::from_raw_parts(diag, n).to_vec();
        emit(out, Arc::new(DiagonalOperator::new(values)))
    })
}

/// Sparse symmetric operator read from a Matrix Market file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_from_mtx(
    path: *const c_char,
    claim_psd: bool,
    out: *mut *mut TkOperator,
) -> TkStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path).to_str().map_err(|e| invalid(format!("path: {e}")))?;
        let matrix = read_matrix_market(path).map_err(lift)?;
        emit(out, Arc::new(matrix.with_psd_claim(psd(claim_psd))))
    })
}

/// `base^power`, applied by repeated products. `base` stays owned by the caller.
///
/// # Safety
/// `base` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_power(
    base: *const TkOperator,
    power: u32,
    out: *mut *mut TkOperator,
) -> TkStatus {
    guard(|| {
        let base = operator(base)?;
        let op = power_operator(Arc::clone(&base.inner), power).map_err(lift)?;
        emit(out, Arc::new(op))
    })
}

/// `f(base) x` through `steps` Lanczos iterations. `base` stays owned by the caller.
///
/// # Safety
/// `base` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_lanczos(
    base: *const TkOperator,
    function: TkFunction,
    steps: usize,
    out: *mut *mut TkOperator,
) -> TkStatus {
    guard(|| {
        let base = operator(base)?;
        let f = match function {
            TkFunction::Exp => MatrixFunction::Exp,
            TkFunction::Log => MatrixFunction::Log,
            TkFunction::Inverse => MatrixFunction::Inverse,
        };
        let op = lanczos_function_operator(Arc::clone(&base.inner), f, steps).map_err(lift)?;
        emit(out, Arc::new(op))
    })
}

const CALLBACK_PREFIX: &str = "callback";

struct CallbackOperator {
    n: usize,
    apply: extern "C" fn(*mut c_void, *const f64, *mut f64, usize) -> c_int,
    user_data: *mut c_void,
    claim: PsdClaim,
}

// The caller promises the callback and its user data may be used from any thread.
unsafe impl Send for CallbackOperator {}
unsafe impl Sync for CallbackOperator {}

impl LinearOperator for CallbackOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_column(&self, x: &[f64], y: &mut [f64]) -> tracekit::Result<()> {
        let code = (self.apply)(self.user_data, x.as_ptr(), y.as_mut_ptr(), self.n);
        if code == 0 {
            Ok(())
        } else {
            Err(Error::Parameter(format!("{CALLBACK_PREFIX} returned {code}")))
        }
    }

    fn psd_claim(&self) -> PsdClaim {
        self.claim
    }
}

/// Operator backed by a caller-supplied symmetric product.
///
/// The callback may be invoked concurrently from several threads and must
/// stay valid, together with `user_data`, until the handle and every handle
/// derived from it are freed.
///
/// # Safety
/// `out` must be writable and the callback contract above must hold.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_callback(
    n: usize,
    apply: TkApplyFn,
    user_data: *mut c_void,
    claim_psd: bool,
    out: *mut *mut TkOperator,
) -> TkStatus {
    guard(|| {
        let apply = apply.ok_or_else(|| null("apply"))?;
        if n == 0 {
            return Err(invalid("dimension must be positive"));
        }
        emit(
            out,
            Arc::new(CallbackOperator {
                n,
                apply,
                user_data,
                claim: psd(claim_psd),
            }),
        )
    })
}

/// Dimension of the operator, or 0 for a null handle.
///
/// # Safety
/// `op` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_dim(op: *const TkOperator) -> usize {
    op.as_ref().map_or(0, |o| o.inner.dim())
}

/// `y = A x` for one vector of length `dim`.
///
/// # Safety
/// `x` and `y` must each point to `dim` doubles and must not overlap.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_apply(op: *const TkOperator, x: *const f64, y: *mut f64) -> TkStatus {
    guard(|| {
        let op = operator(op)?;
        if x.is_null() || y.is_null() {
            return Err(null("vector"));
        }
        let n = op.inner.dim();
        let xs = std::slice::from_raw_parts(x, n);
        let ys = std::slice::from_raw_parts_mut(y, n);
        op.inner.apply_column(xs, ys).map_err(lift)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `op` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tk_operator_free(op: *mut TkOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

fn estimate_out(est: tracekit::TraceEstimate) -> TkEstimate {
    TkEstimate {
        value: est.value,
        algorithm: match est.algorithm {
            Algorithm::Hutchinson => TkAlgorithm::Hutchinson,
            Algorithm::HutchPp => TkAlgorithm::HutchPp,
            Algorithm::NaHutchPp => TkAlgorithm::NaHutchPp,
        },
        m: est.m,
        seed: est.seed,
        adaptive_rounds: est.adaptive_rounds,
    }
}

fn distribution(d: TkDistribution) -> QueryDistribution {
    match d {
        TkDistribution::Gaussian => QueryDistribution::Gaussian,
        TkDistribution::Rademacher => QueryDistribution::Rademacher,
    }
}

/// Trace estimate with `m` queries. NA-Hutch++ uses the default split.
///
/// # Safety
/// `op` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_estimate_trace(
    op: *const TkOperator,
    algorithm: TkAlgorithm,
    m: usize,
    dist: TkDistribution,
    seed: u64,
    out: *mut TkEstimate,
) -> TkStatus {
    guard(|| {
        let op = operator(op)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let alg = match algorithm {
            TkAlgorithm::Hutchinson => Algorithm::Hutchinson,
            TkAlgorithm::HutchPp => Algorithm::HutchPp,
            TkAlgorithm::NaHutchPp => Algorithm::NaHutchPp,
        };
        let est = alg.estimate(op.inner.as_ref(), m, distribution(dist), seed).map_err(lift)?;
        *out = estimate_out(est);
        Ok(())
    })
}

/// NA-Hutch++ with an explicit split `(c1, c2, c3)`.
///
/// # Safety
/// `op` must be a live handle and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_na_hutch_pp(
    op: *const TkOperator,
    m: usize,
    c1: f64,
    c2: f64,
    c3: f64,
    dist: TkDistribution,
    seed: u64,
    out: *mut TkEstimate,
) -> TkStatus {
    guard(|| {
        let op = operator(op)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let split = Split::new(c1, c2, c3).map_err(lift)?;
        let est = tracekit::na_hutch_pp(op.inner.as_ref(), m, split, distribution(dist), seed).map_err(lift)?;
        *out = estimate_out(est);
        Ok(())
    })
}

/// Recommended NA-Hutch++ budget for relative error `epsilon` with failure
/// probability `delta`.
///
/// # Safety
/// `out_m` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tk_query_budget(epsilon: f64, delta: f64, out_m: *mut usize) -> TkStatus {
    guard(|| {
        if out_m.is_null() {
            return Err(null("out_m"));
        }
        *out_m = tracekit::query_budget_for(epsilon, delta).map_err(lift)?.m;
        Ok(())
    })
}

/// Message for the last failed call on this thread, or null. Free with
/// [`tk_string_free`].
#[no_mangle]
pub extern "C" fn tk_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |c| c.clone().into_raw()))
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tk_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tk_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
