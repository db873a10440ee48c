//! C interface. Every call returns an [`FwStatus`]; on failure the message
//! is kept per thread and read back with [`fw_last_error_message`]. Handles
//! are opaque and must be released with their `_free` function.

use fracwave::cq::CqScheme;
use fracwave::fraccalc::FracParams;
use fracwave::harness::{run_convergence, CaseName, ConvergenceOptions, ConvergenceReport, ManufacturedCase};
use fracwave::oracle::{solve_volterra, VolterraProblem};
use fracwave::Error;
use std::cell::RefCell;
use std::ffi::{c_char, c_void};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Index = 3,
    NotConverged = 4,
    Solver = 5,
    Cfl = 6,
    Diverged = 7,
    Config = 8,
    Io = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

/// Which weight family to copy out of a scheme.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwWeights {
    Omega = 0,
    W0 = 1,
    W1 = 2,
}

/// Convergence case selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FwCase {
    Smooth1d = 0,
    Smooth2d = 1,
    Nonsmooth1d = 2,
}

/// Source callback `f(t, user_data)`.
pub type FwSourceFn = Option<unsafe extern "C" fn(t: f64, user_data: *mut c_void) -> f64>;

/// BDF2 convolution quadrature weights for one `(γ, κ, N)`.
pub struct FwCqScheme {
    inner: CqScheme,
}

/// Finished convergence study.
pub struct FwConvergence {
    inner: ConvergenceReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> FwStatus {
    match e {
        Error::Domain(_) | Error::MissingDerivative | Error::DegenerateVolterra(_) => FwStatus::Domain,
        Error::Index { .. } => FwStatus::Index,
        Error::SeriesNotConverged { .. }
        | Error::QuadratureNotConverged { .. }
        | Error::EigenNotConverged(_)
        | Error::FitFailed(_) => FwStatus::NotConverged,
        Error::Solver(_) => FwStatus::Solver,
        Error::Cfl { .. } => FwStatus::Cfl,
        Error::Diverged { .. } => FwStatus::Diverged,
        Error::UnknownCase(_) | Error::Config(_) => FwStatus::Config,
        Error::Level { source, .. } => status_of(source),
        Error::Io(_) => FwStatus::Io,
    }
}

/// Runs `f`, turning library errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (FwStatus, String)>) -> FwStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FwStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            FwStatus::Panic
        }
    }
}

fn lib(e: Error) -> (FwStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (FwStatus, String) {
    (FwStatus::NullPointer, format!("{what} is null"))
}

/// Copies `src` into a caller buffer of `len` entries.
unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), (FwStatus, String)> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err((
            FwStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    std::ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Copies the last error message of this thread, NUL-terminated and
/// truncated to `len` bytes. Returns the full message length plus one.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn fw_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len() + 1
    })
}

/// Damping coefficient `a_γ` for `γ ∈ (−1, 1) \ {0}` and `α₀ > 0`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fw_a_gamma(gamma: f64, alpha0: f64, out: *mut f64) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = FracParams::new(gamma, alpha0).map_err(lib)?.a_gamma();
        Ok(())
    })
}

/// Builds the weights `ω_0 … ω_N` and the correction weights.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fw_cq_new(gamma: f64, kappa: f64, steps: usize, out: *mut *mut FwCqScheme) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = CqScheme::new(gamma, kappa, steps).map_err(lib)?;
        *out = Box::into_raw(Box::new(FwCqScheme { inner }));
        Ok(())
    })
}

/// # Safety
/// `scheme` must be null or come from [`fw_cq_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn fw_cq_free(scheme: *mut FwCqScheme) {
    if !scheme.is_null() {
        drop(Box::from_raw(scheme));
    }
}

/// Number of weights per family, `N + 1`; zero for a null handle.
///
/// # Safety
/// `scheme` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_cq_len(scheme: *const FwCqScheme) -> usize {
    scheme.as_ref().map_or(0, |s| s.inner.omega().len())
}

/// Copies one weight family into `out`, which must hold `fw_cq_len` values.
///
/// # Safety
/// `scheme` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fw_cq_weights(
    scheme: *const FwCqScheme,
    which: FwWeights,
    out: *mut f64,
    len: usize,
) -> FwStatus {
    guard(|| {
        let s = scheme.as_ref().ok_or_else(|| null("scheme"))?;
        let w = match which {
            FwWeights::Omega => s.inner.omega(),
            FwWeights::W0 => s.inner.w0(),
            FwWeights::W1 => s.inner.w1(),
        };
        copy_out(w, out, len)
    })
}

/// Applies the quadrature to `g_0 … g_{len−1}` at step `n < len`; with
/// `corrected` set the correction weights are added.
///
/// # Safety
/// `scheme` must be a live handle, `g` valid for `len` reads and `out`
/// for one write.
#[no_mangle]
pub unsafe extern "C" fn fw_cq_apply(
    scheme: *const FwCqScheme,
    g: *const f64,
    len: usize,
    n: usize,
    corrected: bool,
    out: *mut f64,
) -> FwStatus {
    guard(|| {
        let s = scheme.as_ref().ok_or_else(|| null("scheme"))?;
        if g.is_null() {
            return Err(null("g"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let g = std::slice::from_raw_parts(g, len);
        *out = if corrected {
            s.inner.apply_corrected(g, n)
        } else {
            s.inner.apply(g, n)
        }
        .map_err(lib)?;
        Ok(())
    })
}

/// Solves `u'' + λu + a ∂t^{γ+1}u = f` on `[0, T]` with `m` substeps by
/// product integration and writes `u` at the `m + 1` grid points. A null
/// `f` means zero forcing.
///
/// # Safety
/// `out_u` must be valid for `len` writes; `f` is called with `user_data`
/// from the calling thread only.
#[no_mangle]
pub unsafe extern "C" fn fw_volterra_solve(
    gamma: f64,
    lambda: f64,
    a_gamma: f64,
    f: FwSourceFn,
    user_data: *mut c_void,
    u0: f64,
    v0: f64,
    t_final: f64,
    m: usize,
    out_u: *mut f64,
    len: usize,
) -> FwStatus {
    // the callback runs synchronously on this thread; the wrapper only
    // satisfies the Send + Sync bound of the problem type
    struct Callback(FwSourceFn, *mut c_void);
    unsafe impl Send for Callback {}
    unsafe impl Sync for Callback {}
    impl Callback {
        fn call(&self, t: f64) -> f64 {
            match self.0 {
                Some(func) => unsafe { func(t, self.1) },
                None => 0.0,
            }
        }
    }
    let cb = Callback(f, user_data);
    guard(move || {
        if out_u.is_null() {
            return Err(null("out_u"));
        }
        if len < m.saturating_add(1) {
            return Err((FwStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", m + 1)));
        }
        let forcing = move |t: f64| cb.call(t);
        let problem = VolterraProblem {
            gamma,
            lambda,
            a_gamma,
            f: Arc::new(forcing),
            u0,
            v0,
            t_final,
            m,
        };
        let sol = solve_volterra(&problem).map_err(lib)?;
        copy_out(&sol.u, out_u, len)
    })
}

/// Runs a convergence study with `levels ≥ 3` and the case's default
/// coupling and coarsest step.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fw_convergence_run(
    case_: FwCase,
    gamma: f64,
    alpha0: f64,
    corrected: bool,
    levels: usize,
    out: *mut *mut FwConvergence,
) -> FwStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let name = match case_ {
            FwCase::Smooth1d => CaseName::Smooth1d,
            FwCase::Smooth2d => CaseName::Smooth2d,
            FwCase::Nonsmooth1d => CaseName::Nonsmooth1d,
        };
        let frac = FracParams::new(gamma, alpha0).map_err(lib)?;
        let case = ManufacturedCase::build(name, frac);
        let opts = ConvergenceOptions {
            levels,
            corrected,
            ..ConvergenceOptions::default()
        };
        let inner = run_convergence(&case, &opts).map_err(lib)?;
        *out = Box::into_raw(Box::new(FwConvergence { inner }));
        Ok(())
    })
}

/// # Safety
/// `report` must be null or come from [`fw_convergence_run`].
#[no_mangle]
pub unsafe extern "C" fn fw_convergence_free(report: *mut FwConvergence) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of levels; zero for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fw_convergence_levels(report: *const FwConvergence) -> usize {
    report.as_ref().map_or(0, |r| r.inner.levels.len())
}

/// Copies `h`, `κ` and the error in the case's norm per level. Any output
/// pointer may be null to skip it.
///
/// # Safety
/// `report` must be a live handle and each non-null buffer valid for `len`
/// writes.
#[no_mangle]
pub unsafe extern "C" fn fw_convergence_errors(
    report: *const FwConvergence,
    h: *mut f64,
    kappa: *mut f64,
    error: *mut f64,
    len: usize,
) -> FwStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let lv = &r.inner.levels;
        let cols: [(Vec<f64>, *mut f64); 3] = [
            (lv.iter().map(|l| l.h).collect(), h),
            (lv.iter().map(|l| l.kappa).collect(), kappa),
            (lv.iter().map(|l| r.inner.error_of(l)).collect(), error),
        ];
        for (v, p) in cols {
            if !p.is_null() {
                copy_out(&v, p, len)?;
            }
        }
        Ok(())
    })
}

/// Least-squares rate over all levels and the rate of the last two.
///
/// # Safety
/// `report` must be a live handle; outputs valid for one write each.
#[no_mangle]
pub unsafe extern "C" fn fw_convergence_rate(
    report: *const FwConvergence,
    global: *mut f64,
    last_two: *mut f64,
) -> FwStatus {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if global.is_null() || last_two.is_null() {
            return Err(null("output"));
        }
        let fit = r
            .inner
            .rate()
            .ok_or_else(|| (FwStatus::NotConverged, "errors are not positive".to_string()))?;
        *global = fit.global;
        *last_two = fit.last_two;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_errors_map_to_their_cause() {
        let e = Error::Level {
            level: 2,
            source: Box::new(Error::Cfl { kappa: 1.0, limit: 0.5 }),
        };
        assert_eq!(status_of(&e), FwStatus::Cfl);
    }

    #[test]
    fn panics_become_a_status() {
        assert_eq!(guard(|| panic!("boom")), FwStatus::Panic);
        let msg = LAST_ERROR.with(|e| e.borrow().clone());
        assert_eq!(msg, "internal panic: boom");
    }
}
