//! C ABI over the `chlab` solver.
//!
//! Models and trajectories are opaque handles created by `chlab_*` functions
//! and released with the matching `*_free`. Every fallible call returns a
//! [`ChlabStatus`]; on failure the message is available from
//! [`chlab_last_error`] on the same thread until the next failing call.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chlab::green::{kernel_l2_profile, EigenTable};
use chlab::harness::ModelSection;
use chlab::lab::target_path;
use chlab::norms::{lp_norm_values, sup_lp};
use chlab::pde::solve_u0;
use chlab::rate::rate_eval;
use chlab::spde::{generate_noise, solve_u_eps, solve_y};
use chlab::{Error, GridSpec, ModelSpec, Trajectory};
use serde::Deserialize;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Hypothesis = 3,
    BlowUp = 4,
    DegenerateNoise = 5,
    Config = 6,
    Io = 7,
    Panic = 8,
}

/// Validated model: grid, drift, noise coefficient and initial datum.
pub struct ChlabModel {
    inner: ModelSpec,
}

/// Sampled path on the model's space-time grid.
pub struct ChlabTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ChlabStatus {
    match e {
        Error::Hypothesis { .. } => ChlabStatus::Hypothesis,
        Error::BlowUp { .. } => ChlabStatus::BlowUp,
        Error::DegenerateNoise { .. } => ChlabStatus::DegenerateNoise,
        Error::Config { .. } => ChlabStatus::Config,
        Error::Io(_) => ChlabStatus::Io,
        _ => ChlabStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), ChlabStatus>) -> ChlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ChlabStatus::Ok,
        Ok(Err(s)) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            ChlabStatus::Panic
        }
    }
}

fn fail(e: Error) -> ChlabStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null(what: &str) -> ChlabStatus {
    set_error(format!("{what} is null"));
    ChlabStatus::NullPointer
}

unsafe fn model_ref<'a>(m: *const ChlabModel) -> Result<&'a ModelSpec, ChlabStatus> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

unsafe fn traj_ref<'a>(t: *const ChlabTrajectory) -> Result<&'a Trajectory, ChlabStatus> {
    t.as_ref().map(|t| &t.inner).ok_or_else(|| null("trajectory"))
}

unsafe fn put_traj(out: *mut *mut ChlabTrajectory, r: chlab::Result<Trajectory>) -> Result<(), ChlabStatus> {
    let inner = r.map_err(fail)?;
    *out = Box::into_raw(Box::new(ChlabTrajectory { inner }));
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn chlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default model (`f(u) = u^3 - u`, `sigma = 1`, `u0 = cos x_1`) on the
/// given grid.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn chlab_model_default(
    d: usize,
    n: usize,
    horizon: f64,
    nt: usize,
    out: *mut *mut ChlabModel,
) -> ChlabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = GridSpec::new(d, n, horizon, nt)
            .and_then(ModelSpec::default_for)
            .map_err(fail)?;
        *out = Box::into_raw(Box::new(ChlabModel { inner }));
        Ok(())
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDoc {
    grid: GridSpec,
    #[serde(default)]
    model: ModelSection,
}

/// Model from a TOML document holding a `[grid]` table and an optional
/// `[model]` table, in the run-config dialect.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_model_from_toml(text: *const c_char, out: *mut *mut ChlabModel) -> ChlabStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let s = CStr::from_ptr(text).to_str().map_err(|e| {
            set_error(format!("config is not UTF-8: {e}"));
            ChlabStatus::Config
        })?;
        let doc: ModelDoc = toml::from_str(s).map_err(|e| {
            set_error(e.to_string());
            ChlabStatus::Config
        })?;
        let ms = doc.model;
        let build = if ms.relaxed { ModelSpec::relaxed } else { ModelSpec::new };
        let inner = build(doc.grid, ms.f, ms.sigma, ms.u0, ms.gamma).map_err(fail)?;
        *out = Box::into_raw(Box::new(ChlabModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from a `chlab_model_*` constructor and not be used again.
#[no_mangle]
pub unsafe extern "C" fn chlab_model_free(m: *mut ChlabModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Deterministic limit `u0`.
///
/// # Safety
/// `m` must be a live model and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_solve_u0(m: *const ChlabModel, out: *mut *mut ChlabTrajectory) -> ChlabStatus {
    guard(|| {
        let m = model_ref(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_traj(out, solve_u0(m))
    })
}

/// `u^eps` driven by the noise path of `seed`.
///
/// # Safety
/// `m` must be a live model and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_solve_u_eps(
    m: *const ChlabModel,
    eps: f64,
    seed: u64,
    out: *mut *mut ChlabTrajectory,
) -> ChlabStatus {
    guard(|| {
        let m = model_ref(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_traj(out, solve_u_eps(eps, &generate_noise(seed, &m.grid), m))
    })
}

/// Fluctuation limit `Y` driven by the noise path of `seed`.
///
/// # Safety
/// `m` must be a live model and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_solve_y(
    m: *const ChlabModel,
    seed: u64,
    out: *mut *mut ChlabTrajectory,
) -> ChlabStatus {
    guard(|| {
        let m = model_ref(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = solve_u0(m).and_then(|u0| solve_y(&generate_noise(seed, &m.grid), &u0, m));
        put_traj(out, r)
    })
}

/// Skeleton path `Z^v` for `v(t, x) = amplitude sin(t) cos(x_1)`.
///
/// # Safety
/// `m` must be a live model and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_target_path(
    m: *const ChlabModel,
    amplitude: f64,
    out: *mut *mut ChlabTrajectory,
) -> ChlabStatus {
    guard(|| {
        let m = model_ref(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_traj(out, solve_u0(m).and_then(|u0| target_path(amplitude, &u0, m)))
    })
}

/// Number of stored instants, `nt + 1`; 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn chlab_trajectory_frames(t: *const ChlabTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.len())
}

/// Spatial points per frame, `n^d`; 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn chlab_trajectory_points(t: *const ChlabTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.grid().len())
}

/// Row-major values, frames × points, owned by the handle.
///
/// # Safety
/// `t` must be null or a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn chlab_trajectory_data(t: *const ChlabTrajectory) -> *const f64 {
    t.as_ref().map_or(ptr::null(), |t| t.inner.as_flat().as_ptr())
}

/// Time of frame `j`, or NaN when out of range.
///
/// # Safety
/// `t` must be null or a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn chlab_trajectory_time(t: *const ChlabTrajectory, j: usize) -> f64 {
    match t.as_ref() {
        Some(t) if j < t.inner.len() => t.inner.time(j),
        _ => f64::NAN,
    }
}

/// # Safety
/// `t` must come from a solver call and not be used again.
#[no_mangle]
pub unsafe extern "C" fn chlab_trajectory_free(t: *mut ChlabTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Quadrature `L^p` norm of frame `j`.
///
/// # Safety
/// `t` must be a live trajectory and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_lp_norm(t: *const ChlabTrajectory, j: usize, p: f64, out: *mut f64) -> ChlabStatus {
    guard(|| {
        let t = traj_ref(t)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if j >= t.len() || !(p >= 1.0) {
            return Err(fail(Error::InvalidArgument(format!(
                "need frame < {} and p >= 1, got j = {j}, p = {p}",
                t.len()
            ))));
        }
        *out = lp_norm_values(t.frame(j), t.grid().weight(), p);
        Ok(())
    })
}

/// `sup_t ||X(t)||_p`.
///
/// # Safety
/// `t` must be a live trajectory and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_sup_lp(t: *const ChlabTrajectory, p: f64, out: *mut f64) -> ChlabStatus {
    guard(|| {
        let t = traj_ref(t)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if !(p >= 1.0) {
            return Err(fail(Error::InvalidArgument(format!("p = {p} must be >= 1"))));
        }
        *out = sup_lp(t, p);
        Ok(())
    })
}

/// `||G_t(x, .)||_2` at the node with multi-index `x[0..d]` of the model grid,
/// for each of `len` times.
///
/// # Safety
/// `x` must hold `d` entries; `times` and `out` must hold `len` entries.
#[no_mangle]
pub unsafe extern "C" fn chlab_kernel_profile(
    m: *const ChlabModel,
    x: *const usize,
    times: *const f64,
    len: usize,
    out: *mut f64,
) -> ChlabStatus {
    guard(|| {
        let m = model_ref(m)?;
        if x.is_null() || times.is_null() || out.is_null() {
            return Err(null("x, times or out"));
        }
        let idx = std::slice::from_raw_parts(x, m.grid.d);
        let ts = std::slice::from_raw_parts(times, len);
        let dst = std::slice::from_raw_parts_mut(out, len);
        let eig = EigenTable::new(&m.grid);
        for (o, &t) in dst.iter_mut().zip(ts) {
            *o = kernel_l2_profile(t, idx, &eig).map_err(fail)?;
        }
        Ok(())
    })
}

/// Rate `I(g)` of a target path on the model grid.
///
/// # Safety
/// `m` and `g` must be live handles and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn chlab_rate_eval(
    m: *const ChlabModel,
    g: *const ChlabTrajectory,
    out: *mut f64,
) -> ChlabStatus {
    guard(|| {
        let m = model_ref(m)?;
        let g = traj_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let r = solve_u0(m).and_then(|u0| rate_eval(g, &u0, m)).map_err(fail)?;
        *out = r.value;
        Ok(())
    })
}
