//! C ABI over the `agess` crate.
//!
//! Targets and traces are opaque handles created and freed through this
//! interface. Every function returns an [`AgessStatus`]; on failure the
//! message is available from [`agess_last_error`] on the same thread.
//! Panics are caught at the boundary and reported as `AGESS_STATUS_PANIC`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use agess::adaptation::{run_agess, AdaptConfig, AdaptVariant, SupportTransform};
use agess::diagnostics::{gelman_rubin, multivariate_ess};
use agess::elliptical::{EllipticalFamily, EllipticalParams};
use agess::runners::{run_arw, run_ess};
use agess::target::TargetDensity;
use agess::targets::{gaussian_target, volcano_target};
use agess::trace::Trace;
use agess::Error;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgessStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NotPositiveDefinite = 3,
    Numerical = 4,
    ChainInit = 5,
    ShrinkageLimit = 6,
    /// The run stopped early; the partial trace is still returned.
    SamplingAbort = 7,
    Diagnostics = 8,
    Contract = 9,
    Io = 10,
    Panic = 11,
}

/// Proposal family selector for [`AgessConfig`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgessFamily {
    Gaussian = 0,
    /// `param_a` is the degrees of freedom.
    StudentT = 1,
    /// `param_a` is `m`, `param_b` the joint-space exponent.
    PearsonVii = 2,
}

/// Reference-update variant for [`AgessConfig`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgessVariant {
    FullCovariance = 0,
    ScalarScale = 1,
}

/// Settings of an adaptive run. Fill with [`agess_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct AgessConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub family: AgessFamily,
    pub param_a: f64,
    pub param_b: f64,
    pub variant: AgessVariant,
    pub beta: f64,
    pub eps_a: f64,
    pub eps_b: f64,
    pub burn_1d_fraction: f64,
    /// Non-positive selects the dimension-dependent default.
    pub weight_exponent: f64,
    /// Zero disables adaptation.
    pub adapt: i32,
    pub seed: u64,
}

/// Opaque log-density handle.
pub struct AgessTarget {
    inner: TargetDensity,
}

/// Opaque chain handle.
pub struct AgessTrace {
    inner: Trace,
}

/// Log-density callback: `user_data`, the state and its length.
pub type AgessLogDensityFn = Option<extern "C" fn(user_data: *mut c_void, x: *const f64, dim: usize) -> f64>;

struct UserData(*mut c_void);
// The caller promises the callback may be invoked from any thread.
unsafe impl Send for UserData {}
unsafe impl Sync for UserData {}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AgessStatus {
    match e {
        Error::Config(_) => AgessStatus::InvalidArgument,
        Error::NotPositiveDefinite(_) => AgessStatus::NotPositiveDefinite,
        Error::Numerical(_) => AgessStatus::Numerical,
        Error::ChainInit(_) => AgessStatus::ChainInit,
        Error::ShrinkageLimit(_) => AgessStatus::ShrinkageLimit,
        Error::SamplingAbort { .. } => AgessStatus::SamplingAbort,
        Error::Diagnostics(_) => AgessStatus::Diagnostics,
        Error::Contract(_) => AgessStatus::Contract,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => AgessStatus::Io,
    }
}

fn fail(status: AgessStatus, msg: &str) -> AgessStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> AgessStatus) -> AgessStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == AgessStatus::Ok {
                set_error("");
            }
            s
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(AgessStatus::Panic, &format!("panic: {msg}"))
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize) -> Option<&'a [f64]> {
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

fn boxed_target(out: *mut *mut AgessTarget, t: TargetDensity) -> AgessStatus {
    unsafe { *out = Box::into_raw(Box::new(AgessTarget { inner: t })) };
    AgessStatus::Ok
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn agess_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn agess_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Gaussian target `N(mean, cov)`; `cov` is row-major `dim x dim`.
#[no_mangle]
pub unsafe extern "C" fn agess_target_gaussian(
    dim: usize,
    mean: *const f64,
    cov: *const f64,
    out: *mut *mut AgessTarget,
) -> AgessStatus {
    guard(|| {
        let (Some(m), Some(c)) = (slice(mean, dim), slice(cov, dim * dim)) else {
            return fail(AgessStatus::NullPointer, "mean, cov and out must be non-null");
        };
        if out.is_null() {
            return fail(AgessStatus::NullPointer, "out must be non-null");
        }
        if dim == 0 {
            return fail(AgessStatus::InvalidArgument, "dim must be positive");
        }
        match gaussian_target(DVector::from_column_slice(m), DMatrix::from_row_slice(dim, dim, c)) {
            Ok(t) => boxed_target(out, t),
            Err(e) => fail(status_of(&e), &e.to_string()),
        }
    })
}

/// Volcano target in `dim` dimensions.
#[no_mangle]
pub unsafe extern "C" fn agess_target_volcano(dim: usize, out: *mut *mut AgessTarget) -> AgessStatus {
    guard(|| {
        if out.is_null() {
            return fail(AgessStatus::NullPointer, "out must be non-null");
        }
        if dim == 0 {
            return fail(AgessStatus::InvalidArgument, "dim must be positive");
        }
        boxed_target(out, volcano_target(dim))
    })
}

/// Target defined by a callback. `user_data` must stay valid until the
/// handle is freed; a NaN return is treated as minus infinity.
#[no_mangle]
pub unsafe extern "C" fn agess_target_callback(
    dim: usize,
    log_density: AgessLogDensityFn,
    user_data: *mut c_void,
    out: *mut *mut AgessTarget,
) -> AgessStatus {
    guard(|| {
        let Some(cb) = log_density else {
            return fail(AgessStatus::NullPointer, "log_density must be non-null");
        };
        if out.is_null() {
            return fail(AgessStatus::NullPointer, "out must be non-null");
        }
        if dim == 0 {
            return fail(AgessStatus::InvalidArgument, "dim must be positive");
        }
        let data = UserData(user_data);
        let t = TargetDensity::new("callback", dim, move |x: &[f64]| {
            let d = &data;
            cb(d.0, x.as_ptr(), x.len())
        });
        boxed_target(out, t)
    })
}

#[no_mangle]
pub unsafe extern "C" fn agess_target_free(target: *mut AgessTarget) {
    if !target.is_null() {
        drop(Box::from_raw(target));
    }
}

#[no_mangle]
pub unsafe extern "C" fn agess_target_dim(target: *const AgessTarget) -> usize {
    target.as_ref().map_or(0, |t| t.inner.dim())
}

/// Evaluates the target at `x` (length `dim`).
#[no_mangle]
pub unsafe extern "C" fn agess_target_log_density(
    target: *const AgessTarget,
    x: *const f64,
    out: *mut f64,
) -> AgessStatus {
    guard(|| {
        let Some(t) = target.as_ref() else {
            return fail(AgessStatus::NullPointer, "target must be non-null");
        };
        let (Some(x), false) = (slice(x, t.inner.dim()), out.is_null()) else {
            return fail(AgessStatus::NullPointer, "x and out must be non-null");
        };
        *out = t.inner.log_density(x);
        AgessStatus::Ok
    })
}

/// Default settings for a `dim`-dimensional run.
#[no_mangle]
pub unsafe extern "C" fn agess_config_default(
    dim: usize,
    iterations: usize,
    burn_in: usize,
    out: *mut AgessConfig,
) -> AgessStatus {
    guard(|| {
        if out.is_null() {
            return fail(AgessStatus::NullPointer, "out must be non-null");
        }
        let c = AdaptConfig::for_dim(dim.max(1), iterations, burn_in);
        let (family, a, b) = match c.family {
            EllipticalFamily::Gaussian => (AgessFamily::Gaussian, 0.0, 0.0),
            EllipticalFamily::StudentT { nu } => (AgessFamily::StudentT, nu, 0.0),
            EllipticalFamily::PearsonVII { m, big_m } => (AgessFamily::PearsonVii, m, big_m),
        };
        *out = AgessConfig {
            iterations,
            burn_in,
            family,
            param_a: a,
            param_b: b,
            variant: AgessVariant::FullCovariance,
            beta: c.beta,
            eps_a: c.eps_a,
            eps_b: c.eps_b,
            burn_1d_fraction: c.burn_1d_fraction,
            weight_exponent: 0.0,
            adapt: 1,
            seed: c.seed,
        };
        AgessStatus::Ok
    })
}

fn family_of(c: &AgessConfig) -> EllipticalFamily {
    match c.family {
        AgessFamily::Gaussian => EllipticalFamily::Gaussian,
        AgessFamily::StudentT => EllipticalFamily::StudentT { nu: c.param_a },
        AgessFamily::PearsonVii => EllipticalFamily::PearsonVII { m: c.param_a, big_m: c.param_b },
    }
}

fn adapt_config(c: &AgessConfig, dim: usize) -> AdaptConfig {
    let mut a = AdaptConfig::for_dim(dim, c.iterations, c.burn_in);
    a.family = family_of(c);
    a.variant = match c.variant {
        AgessVariant::FullCovariance => AdaptVariant::FullCovariance,
        AgessVariant::ScalarScale => AdaptVariant::ScalarScale,
    };
    a.beta = c.beta;
    a.eps_a = c.eps_a;
    a.eps_b = c.eps_b;
    a.burn_1d_fraction = c.burn_1d_fraction;
    a.weight_exponent = (c.weight_exponent > 0.0).then_some(c.weight_exponent);
    a.adapt = c.adapt != 0;
    a.seed = c.seed;
    a
}

/// Stores a finished or aborted run; an aborted run still yields its
/// partial trace.
unsafe fn finish_run(result: agess::Result<Trace>, out: *mut *mut AgessTrace) -> AgessStatus {
    match result {
        Ok(t) => {
            *out = Box::into_raw(Box::new(AgessTrace { inner: t }));
            AgessStatus::Ok
        }
        Err(Error::SamplingAbort { iteration, source, partial }) => {
            *out = Box::into_raw(Box::new(AgessTrace { inner: *partial }));
            fail(AgessStatus::SamplingAbort, &format!("sampling aborted at iteration {iteration}: {source}"))
        }
        Err(e) => fail(status_of(&e), &e.to_string()),
    }
}

unsafe fn matrix_or_identity(p: *const f64, dim: usize) -> DMatrix<f64> {
    match slice(p, dim * dim) {
        Some(s) => DMatrix::from_row_slice(dim, dim, s),
        None => DMatrix::identity(dim, dim),
    }
}

/// Adaptive run from `init`. `mu0` defaults to zero and `sigma0` (row-major)
/// to the identity when null.
#[no_mangle]
pub unsafe extern "C" fn agess_run(
    target: *const AgessTarget,
    config: *const AgessConfig,
    init: *const f64,
    mu0: *const f64,
    sigma0: *const f64,
    out: *mut *mut AgessTrace,
) -> AgessStatus {
    guard(|| {
        let (Some(t), Some(c)) = (target.as_ref(), config.as_ref()) else {
            return fail(AgessStatus::NullPointer, "target and config must be non-null");
        };
        let p = t.inner.dim();
        let Some(x0) = slice(init, p) else {
            return fail(AgessStatus::NullPointer, "init must be non-null");
        };
        if out.is_null() {
            return fail(AgessStatus::NullPointer, "out must be non-null");
        }
        *out = ptr::null_mut();
        let mean = slice(mu0, p).map_or_else(|| DVector::zeros(p), DVector::from_column_slice);
        let scale = matrix_or_identity(sigma0, p);
        let cfg = adapt_config(c, p);
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let result = run_agess(&t.inner, &SupportTransform::identity(), x0, &mean, &scale, &cfg, &mut rng);
        finish_run(result, out)
    })
}

/// Elliptical slice sampling with prior `N(prior_mean, prior_cov)`; null
/// arguments mean zero mean and identity covariance.
#[no_mangle]
pub unsafe extern "C" fn agess_run_ess(
    target: *const AgessTarget,
    prior_mean: *const f64,
    prior_cov: *const f64,
    init: *const f64,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    out: *mut *mut AgessTrace,
) -> AgessStatus {
    guard(|| {
        let Some(t) = target.as_ref() else {
            return fail(AgessStatus::NullPointer, "target must be non-null");
        };
        let p = t.inner.dim();
        let (Some(x0), false) = (slice(init, p), out.is_null()) else {
            return fail(AgessStatus::NullPointer, "init and out must be non-null");
        };
        *out = ptr::null_mut();
        let mean = slice(prior_mean, p).map_or_else(|| DVector::zeros(p), DVector::from_column_slice);
        let prior = match EllipticalParams::new(EllipticalFamily::Gaussian, mean, matrix_or_identity(prior_cov, p)) {
            Ok(v) => v,
            Err(e) => return fail(status_of(&e), &e.to_string()),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        finish_run(run_ess(&t.inner, &prior, x0, iterations, burn_in, &mut rng), out)
    })
}

/// Adaptive random-walk Metropolis; null `initial_cov` means the identity.
#[no_mangle]
pub unsafe extern "C" fn agess_run_arw(
    target: *const AgessTarget,
    initial_cov: *const f64,
    init: *const f64,
    iterations: usize,
    burn_in: usize,
    seed: u64,
    out: *mut *mut AgessTrace,
) -> AgessStatus {
    guard(|| {
        let Some(t) = target.as_ref() else {
            return fail(AgessStatus::NullPointer, "target must be non-null");
        };
        let p = t.inner.dim();
        let (Some(x0), false) = (slice(init, p), out.is_null()) else {
            return fail(AgessStatus::NullPointer, "init and out must be non-null");
        };
        *out = ptr::null_mut();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = matrix_or_identity(initial_cov, p);
        finish_run(run_arw(&t.inner, x0, &cov, iterations, burn_in, &mut rng), out)
    })
}

#[no_mangle]
pub unsafe extern "C" fn agess_trace_free(trace: *mut AgessTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of stored states, the initial state included.
#[no_mangle]
pub unsafe extern "C" fn agess_trace_len(trace: *const AgessTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.len())
}

#[no_mangle]
pub unsafe extern "C" fn agess_trace_dim(trace: *const AgessTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.inner.dim())
}

/// Copies the states row-major into `buf`, which must hold `len * dim` values.
#[no_mangle]
pub unsafe extern "C" fn agess_trace_states(trace: *const AgessTrace, buf: *mut f64, buf_len: usize) -> AgessStatus {
    guard(|| {
        let Some(t) = trace.as_ref() else {
            return fail(AgessStatus::NullPointer, "trace must be non-null");
        };
        let need = t.inner.len() * t.inner.dim();
        if buf.is_null() {
            return fail(AgessStatus::NullPointer, "buf must be non-null");
        }
        if buf_len < need {
            return fail(AgessStatus::InvalidArgument, &format!("buffer holds {buf_len} values, need {need}"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (chunk, row) in dst.chunks_exact_mut(t.inner.dim()).zip(t.inner.rows()) {
            chunk.copy_from_slice(row);
        }
        AgessStatus::Ok
    })
}

/// Copies the per-transition loop counts (`len - 1` values) into `buf`.
#[no_mangle]
pub unsafe extern "C" fn agess_trace_loop_counts(
    trace: *const AgessTrace,
    buf: *mut u64,
    buf_len: usize,
) -> AgessStatus {
    guard(|| {
        let Some(t) = trace.as_ref() else {
            return fail(AgessStatus::NullPointer, "trace must be non-null");
        };
        let stats = t.inner.stats();
        if buf.is_null() {
            return fail(AgessStatus::NullPointer, "buf must be non-null");
        }
        if buf_len < stats.len() {
            return fail(AgessStatus::InvalidArgument, &format!("buffer holds {buf_len} values, need {}", stats.len()));
        }
        let dst = std::slice::from_raw_parts_mut(buf, stats.len());
        for (d, s) in dst.iter_mut().zip(stats) {
            *d = s.loop_count as u64;
        }
        AgessStatus::Ok
    })
}

#[no_mangle]
pub unsafe extern "C" fn agess_trace_mean_loop_count(trace: *const AgessTrace) -> f64 {
    trace.as_ref().map_or(f64::NAN, |t| t.inner.mean_loop_count())
}

/// Multivariate effective sample size of the post-burn-in states.
#[no_mangle]
pub unsafe extern "C" fn agess_trace_mess(trace: *const AgessTrace, out: *mut f64) -> AgessStatus {
    guard(|| {
        let (Some(t), false) = (trace.as_ref(), out.is_null()) else {
            return fail(AgessStatus::NullPointer, "trace and out must be non-null");
        };
        match multivariate_ess(&t.inner.post_burn_in()) {
            Ok(v) => {
                *out = v;
                AgessStatus::Ok
            }
            Err(e) => fail(status_of(&e), &e.to_string()),
        }
    })
}

/// Multivariate effective sample size of `n x p` row-major samples.
#[no_mangle]
pub unsafe extern "C" fn agess_multivariate_ess(data: *const f64, n: usize, p: usize, out: *mut f64) -> AgessStatus {
    guard(|| {
        let (Some(d), false) = (slice(data, n * p), out.is_null()) else {
            return fail(AgessStatus::NullPointer, "data and out must be non-null");
        };
        match multivariate_ess(&DMatrix::from_row_slice(n, p, d)) {
            Ok(v) => {
                *out = v;
                AgessStatus::Ok
            }
            Err(e) => fail(status_of(&e), &e.to_string()),
        }
    })
}

/// Multivariate scale reduction factor of `chains` blocks of `n x p`
/// row-major samples stored back to back.
#[no_mangle]
pub unsafe extern "C" fn agess_gelman_rubin(
    data: *const f64,
    chains: usize,
    n: usize,
    p: usize,
    out: *mut f64,
) -> AgessStatus {
    guard(|| {
        let (Some(d), false) = (slice(data, chains * n * p), out.is_null()) else {
            return fail(AgessStatus::NullPointer, "data and out must be non-null");
        };
        let blocks: Vec<DMatrix<f64>> = d.chunks_exact((n * p).max(1)).take(chains).map(|b| DMatrix::from_row_slice(n, p, b)).collect();
        match gelman_rubin(&blocks) {
            Ok(v) => {
                *out = v;
                AgessStatus::Ok
            }
            Err(e) => fail(status_of(&e), &e.to_string()),
        }
    })
}
