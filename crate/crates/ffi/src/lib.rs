//! C interface to the `phasemin` solver.
//!
//! Instances are opaque heap handles released with [`pm_instance_free`].
//! Every fallible call returns a [`PmStatus`]; on failure a message is kept
//! per thread and can be copied out with [`pm_last_error_message`].
//! Complex vectors cross the boundary as separate real and imaginary arrays.

use std::cell::RefCell;
use std::ffi::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use phasemin::altmin::{self, SolveConfig, StopReason};
use phasemin::complex::C64;
use phasemin::sensing::{make_instance, random_unit_iterate, SensingInstance, SignalMode};
use phasemin::{expectations, rng, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    SingularInstance = 4,
    DegenerateDirection = 5,
    StalledAtZero = 6,
    Internal = 7,
}

/// Opaque sensing instance.
pub struct PmInstance {
    inner: SensingInstance,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmSolveConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub stall_window: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PmStopReason {
    Converged = 0,
    MaxIter = 1,
    Stalled = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmSolveReport {
    /// 1 on success, 0 otherwise.
    pub success: c_int,
    pub final_error: f64,
    pub iterations: usize,
    pub stop_reason: PmStopReason,
    /// `|<u0, w>|` at the last iterate.
    pub final_correlation: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmFgEstimate {
    pub c: f64,
    pub f_hat: f64,
    pub stderr_f: f64,
    pub g_hat: f64,
    pub stderr_g: f64,
    pub n_samples: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> PmStatus {
    match err {
        Error::DimensionMismatch { .. } => PmStatus::DimensionMismatch,
        Error::DegenerateDirection { .. } => PmStatus::DegenerateDirection,
        Error::SingularInstance(_) => PmStatus::SingularInstance,
        Error::StalledAtZero { .. } => PmStatus::StalledAtZero,
        Error::Domain(_) | Error::InvalidConfig(_) => PmStatus::InvalidArgument,
        _ => PmStatus::Internal,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), (PmStatus, String)>) -> PmStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            PmStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PmStatus::Internal
        }
    }
}

trait IntoFfi<T> {
    fn ffi(self) -> Result<T, (PmStatus, String)>;
}

impl<T> IntoFfi<T> for phasemin::Result<T> {
    fn ffi(self) -> Result<T, (PmStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (PmStatus, String) {
    (PmStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_complex(re: *const f64, im: *const f64, len: usize) -> Result<Vec<C64>, (PmStatus, String)> {
    if re.is_null() || im.is_null() {
        return Err(null("input array"));
    }
    let (re, im) = unsafe { (slice::from_raw_parts(re, len), slice::from_raw_parts(im, len)) };
    Ok(re.iter().zip(im).map(|(a, b)| C64::new(*a, *b)).collect())
}

unsafe fn write_complex(v: &[C64], re: *mut f64, im: *mut f64) {
    let (re, im) = unsafe {
        (
            slice::from_raw_parts_mut(re, v.len()),
            slice::from_raw_parts_mut(im, v.len()),
        )
    };
    for ((r, i), c) in re.iter_mut().zip(im.iter_mut()).zip(v) {
        *r = c.re;
        *i = c.im;
    }
}

unsafe fn instance_ref<'a>(inst: *const PmInstance) -> Result<&'a SensingInstance, (PmStatus, String)> {
    unsafe { inst.as_ref() }.map(|i| &i.inner).ok_or_else(|| null("instance"))
}

fn config_of(cfg: *const PmSolveConfig) -> Result<SolveConfig, (PmStatus, String)> {
    match unsafe { cfg.as_ref() } {
        None => Ok(SolveConfig::default()),
        Some(c) => {
            let out = SolveConfig {
                tol: c.tol,
                max_iter: c.max_iter,
                stall_window: c.stall_window,
            };
            out.validate().ffi()?;
            Ok(out)
        }
    }
}

fn report_of(r: &altmin::SolveReport) -> PmSolveReport {
    PmSolveReport {
        success: r.success as c_int,
        final_error: r.final_error,
        iterations: r.iterations,
        stop_reason: match r.stop_reason {
            StopReason::Converged => PmStopReason::Converged,
            StopReason::MaxIter => PmStopReason::MaxIter,
            StopReason::Stalled => PmStopReason::Stalled,
        },
        final_correlation: r.correlation_trace.last().copied().unwrap_or(0.0),
    }
}

/// Library version as a static NUL-terminated string.
#[unsafe(no_mangle)]
pub extern "C" fn pm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default tolerance, iteration cap and stall window.
#[unsafe(no_mangle)]
pub extern "C" fn pm_solve_config_default() -> PmSolveConfig {
    let d = SolveConfig::default();
    PmSolveConfig {
        tol: d.tol,
        max_iter: d.max_iter,
        stall_window: d.stall_window,
    }
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Draws an instance with a random unit signal.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_instance_new(seed: u64, n: usize, m: usize, out: *mut *mut PmInstance) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = make_instance(seed, n, m, SignalMode::RandomUnit).ffi()?;
        unsafe { *out = Box::into_raw(Box::new(PmInstance { inner })) };
        Ok(())
    })
}

/// Draws an instance for the given signal of length `n`; the signal is
/// normalized.
///
/// # Safety
/// `z_re` and `z_im` must point to `n` readable doubles, `out` to writable
/// storage for one handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_instance_new_with_signal(
    seed: u64,
    n: usize,
    m: usize,
    z_re: *const f64,
    z_im: *const f64,
    out: *mut *mut PmInstance,
) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let z = unsafe { read_complex(z_re, z_im, n)? };
        let inner = make_instance(seed, n, m, SignalMode::Given(z)).ffi()?;
        unsafe { *out = Box::into_raw(Box::new(PmInstance { inner })) };
        Ok(())
    })
}

/// Releases an instance; null is ignored.
///
/// # Safety
/// `inst` must be null or a handle from this library not yet freed.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_instance_free(inst: *mut PmInstance) {
    if !inst.is_null() {
        drop(unsafe { Box::from_raw(inst) });
    }
}

/// Signal dimension, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_instance_n(inst: *const PmInstance) -> usize {
    unsafe { inst.as_ref() }.map_or(0, |i| i.inner.n())
}

/// Measurement count, or 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live handle.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_instance_m(inst: *const PmInstance) -> usize {
    unsafe { inst.as_ref() }.map_or(0, |i| i.inner.m())
}

/// Copies the `m` magnitudes into `y`.
///
/// # Safety
/// `inst` must be a live handle and `y` point to `len` writable doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_instance_measurements(inst: *const PmInstance, y: *mut f64, len: usize) -> PmStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst)? };
        if y.is_null() {
            return Err(null("y"));
        }
        if len != inst.m() {
            return Err((PmStatus::DimensionMismatch, format!("expected length {}, got {len}", inst.m())));
        }
        unsafe { slice::from_raw_parts_mut(y, len) }.copy_from_slice(inst.y());
        Ok(())
    })
}

/// Copies the unit signal `z` (length `n`).
///
/// # Safety
/// `inst` must be a live handle, `re` and `im` point to `len` writable doubles.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_instance_signal(inst: *const PmInstance, re: *mut f64, im: *mut f64, len: usize) -> PmStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst)? };
        if re.is_null() || im.is_null() {
            return Err(null("output array"));
        }
        if len != inst.n() {
            return Err((PmStatus::DimensionMismatch, format!("expected length {}, got {len}", inst.n())));
        }
        unsafe { write_complex(inst.z(), re, im) };
        Ok(())
    })
}

/// Solves from a random unit initial iterate drawn from `init_seed`. A null
/// `cfg` selects the defaults. When `x_re`/`x_im` are non-null the final
/// estimate (length `n`) is written there.
///
/// # Safety
/// Pointers must be null or valid for the documented lengths.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_solve(
    inst: *const PmInstance,
    init_seed: u64,
    cfg: *const PmSolveConfig,
    report: *mut PmSolveReport,
    x_re: *mut f64,
    x_im: *mut f64,
) -> PmStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst)? };
        if report.is_null() {
            return Err(null("report"));
        }
        let cfg = config_of(cfg)?;
        let w1 = random_unit_iterate(&mut rng::rng_from_seed(init_seed), inst);
        let r = altmin::solve(inst, &w1, &cfg).ffi()?;
        unsafe { *report = report_of(&r) };
        if !x_re.is_null() && !x_im.is_null() {
            unsafe { write_complex(&r.estimate, x_re, x_im) };
        }
        Ok(())
    })
}

/// Solves from the given initial iterate `w1` of length `m`, used as
/// given; normally a unit vector in the range of the instance.
///
/// # Safety
/// Pointers must be null or valid for the documented lengths.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_solve_from(
    inst: *const PmInstance,
    w_re: *const f64,
    w_im: *const f64,
    len: usize,
    cfg: *const PmSolveConfig,
    report: *mut PmSolveReport,
    x_re: *mut f64,
    x_im: *mut f64,
) -> PmStatus {
    guard(|| {
        let inst = unsafe { instance_ref(inst)? };
        if report.is_null() {
            return Err(null("report"));
        }
        let w1 = unsafe { read_complex(w_re, w_im, len)? };
        let cfg = config_of(cfg)?;
        let r = altmin::solve(inst, &w1, &cfg).ffi()?;
        unsafe { *report = report_of(&r) };
        if !x_re.is_null() && !x_im.is_null() {
            unsafe { write_complex(&r.estimate, x_re, x_im) };
        }
        Ok(())
    })
}

/// `min_psi ||e^{i psi} x - z||` for vectors of length `len`.
///
/// # Safety
/// Input arrays must hold `len` doubles each; `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_dist_up_to_phase(
    x_re: *const f64,
    x_im: *const f64,
    z_re: *const f64,
    z_im: *const f64,
    len: usize,
    out: *mut f64,
) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = unsafe { read_complex(x_re, x_im, len)? };
        let z = unsafe { read_complex(z_re, z_im, len)? };
        unsafe { *out = altmin::dist_up_to_phase(&x, &z) };
        Ok(())
    })
}

/// Monte Carlo estimate of `f(c)` and `g(c)` for `0 <= c < 1`.
///
/// # Safety
/// `out` must be writable.
#[unsafe(no_mangle)]
pub unsafe extern "C" fn pm_estimate_fg(c: f64, n_samples: usize, seed: u64, out: *mut PmFgEstimate) -> PmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let e = expectations::estimate_fg(c, n_samples, &mut rng::rng_from_seed(seed)).ffi()?;
        unsafe {
            *out = PmFgEstimate {
                c: e.c,
                f_hat: e.f_hat,
                stderr_f: e.stderr_f,
                g_hat: e.g_hat,
                stderr_g: e.stderr_g,
                n_samples: e.n_samples,
            }
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_mapping() {
        assert_eq!(status_of(&Error::Domain("x".into())), PmStatus::InvalidArgument);
        assert_eq!(
            status_of(&Error::DimensionMismatch { expected: 1, found: 2 }),
            PmStatus::DimensionMismatch
        );
        assert_eq!(status_of(&Error::StalledAtZero { norm: 0.0 }), PmStatus::StalledAtZero);
    }

    #[test]
    fn panics_become_status() {
        assert_eq!(guard(|| panic!("boom")), PmStatus::Internal);
        let mut buf = [0 as c_char; 32];
        let len = unsafe { pm_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(len, "internal panic".len());
    }
}
