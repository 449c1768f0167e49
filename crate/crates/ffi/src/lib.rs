//! C ABI over `tis_fhn`.
//!
//! Conventions:
//! - every function returns a [`TfStatus`]; results go through out-pointers;
//! - `TfParams` and `TfTrajectory` are opaque, created by `*_new` /
//!   [`tf_simulate`] and released with the matching `*_free`;
//! - after a non-`Ok` status, [`tf_last_error_message`] describes the failure
//!   on the calling thread;
//! - panics never cross the boundary; they surface as `TfStatus::Panic`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tis_fhn::integrator::Method;
use tis_fhn::{frozen, sim, singular, Drive, Error, IntegratorConfig, Params, State, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    /// Envelope value or point outside the domain of the operation.
    Domain = 3,
    /// Parameters outside the region an analysis requires.
    Region = 4,
    /// Integration diverged or a singular arc could not be continued.
    Numerical = 5,
    BufferTooSmall = 6,
    Io = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TfStatus {
    match e {
        Error::InvalidParameter { .. } | Error::UnsupportedDrive(_) | Error::EmptyInput(_) => {
            TfStatus::InvalidParameter
        }
        Error::Domain(_)
        | Error::FoldUndefined { .. }
        | Error::UndefinedCoordinate(_)
        | Error::Boundary(_)
        | Error::InvalidStart(_) => TfStatus::Domain,
        Error::RegionPrecondition(_) => TfStatus::Region,
        Error::NearFold { .. } | Error::Divergence { .. } => TfStatus::Numerical,
        Error::Io(_) => TfStatus::Io,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard<F>(f: F) -> TfStatus
where
    F: FnOnce() -> Result<(), TfError>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TfStatus::Ok,
        Ok(Err(TfError(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside tis_fhn".to_string());
            TfStatus::Panic
        }
    }
}

struct TfError(TfStatus, String);

impl From<Error> for TfError {
    fn from(e: Error) -> Self {
        TfError(status_of(&e), e.to_string())
    }
}

fn null(name: &str) -> TfError {
    TfError(TfStatus::NullPointer, format!("`{name}` is null"))
}

/// Writes `value` through `out`.
///
/// # Safety
/// `out` must be null or valid for writes.
unsafe fn put<T>(out: *mut T, name: &str, value: T) -> Result<(), TfError> {
    if out.is_null() {
        return Err(null(name));
    }
    out.write(value);
    Ok(())
}

/// # Safety
/// `p` must be null or a live handle from [`tf_params_new`].
unsafe fn params<'a>(p: *const TfParams) -> Result<&'a Params, TfError> {
    p.as_ref().map(|h| &h.0).ok_or_else(|| null("params"))
}

/// Opaque parameter set.
pub struct TfParams(Params);

/// Opaque stored trajectory.
pub struct TfTrajectory(Trajectory);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfDriveKind {
    AveragedCosine = 0,
    SignCosine = 1,
    FrozenConstant = 2,
    RawInterference = 3,
}

/// Envelope description. `x` is `eta`, `c` or `omega1` by kind; `y` is
/// `omega2` for `RawInterference` and ignored otherwise.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfDrive {
    pub kind: TfDriveKind,
    pub x: f64,
    pub y: f64,
}

impl TfDrive {
    fn to_drive(self) -> Drive {
        match self.kind {
            TfDriveKind::AveragedCosine => Drive::AveragedCosine { eta: self.x },
            TfDriveKind::SignCosine => Drive::SignCosine { eta: self.x },
            TfDriveKind::FrozenConstant => Drive::FrozenConstant { c: self.x },
            TfDriveKind::RawInterference => Drive::RawInterference {
                omega1: self.x,
                omega2: self.y,
            },
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfMethod {
    FixedRk4 = 0,
    AdaptiveRk45 = 1,
}

/// Integrator settings. `dt` is used by `FixedRk4`; the tolerances and
/// `max_dt` by `AdaptiveRk45`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct TfIntegrator {
    pub method: TfMethod,
    pub dt: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_dt: f64,
    pub sample_stride: usize,
}

impl TfIntegrator {
    fn to_config(self) -> Result<IntegratorConfig, TfError> {
        let method = match self.method {
            TfMethod::FixedRk4 => Method::FixedRk4 { dt: self.dt },
            TfMethod::AdaptiveRk45 => Method::AdaptiveRk45 {
                rel_tol: self.rel_tol,
                abs_tol: self.abs_tol,
                max_dt: self.max_dt,
            },
        };
        let cfg = IntegratorConfig {
            method,
            sample_stride: self.sample_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TfRegion {
    pub in_e_unique: bool,
    pub in_e_les_sufficient: bool,
    pub in_e_0: bool,
    pub in_e_ges_small_eps: bool,
    /// Meaningful only when `in_e_0` is set.
    pub no_spiking_condition: bool,
    pub piecewise_spiking_condition: bool,
}

/// Message for the last failure on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be valid for writes. On success `*out` owns a handle to be
/// released with [`tf_params_free`].
#[no_mangle]
pub unsafe extern "C" fn tf_params_new(
    a: f64,
    b: f64,
    beta: f64,
    gamma: f64,
    epsilon: f64,
    out: *mut *mut TfParams,
) -> TfStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = Params::new(a, b, beta, gamma, epsilon)?;
        out.write(Box::into_raw(Box::new(TfParams(p))));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`tf_params_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tf_params_free(p: *mut TfParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Default integrator settings (adaptive).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_integrator_default(out: *mut TfIntegrator) -> TfStatus {
    guard(|| {
        let d = IntegratorConfig::default();
        let Method::AdaptiveRk45 {
            rel_tol,
            abs_tol,
            max_dt,
        } = d.method
        else {
            unreachable!()
        };
        let v = TfIntegrator {
            method: TfMethod::AdaptiveRk45,
            dt: 0.0,
            rel_tol,
            abs_tol,
            max_dt,
            sample_stride: d.sample_stride,
        };
        put(out, "out", v)
    })
}

/// Leftmost equilibrium of the frozen system at envelope value `c`.
///
/// # Safety
/// `p` must be a live handle; `v_e` and `w_e` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_equilibrium(p: *const TfParams, c: f64, v_e: *mut f64, w_e: *mut f64) -> TfStatus {
    guard(|| {
        let eq = frozen::equilibrium(params(p)?, c)?;
        put(v_e, "v_e", eq.v_e)?;
        put(w_e, "w_e", eq.w_e)
    })
}

/// Fold point `(v_m, w_m)` of the nullcline at `c`.
///
/// # Safety
/// `p` must be a live handle; `v_m` and `w_m` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_fold_point(p: *const TfParams, c: f64, v_m: *mut f64, w_m: *mut f64) -> TfStatus {
    guard(|| {
        let f = frozen::fold_point(params(p)?, c)?;
        put(v_m, "v_m", f.v_m)?;
        put(w_m, "w_m", f.w_m)
    })
}

/// # Safety
/// `p` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_classify(p: *const TfParams, c_grid: usize, out: *mut TfRegion) -> TfStatus {
    guard(|| {
        let p = params(p)?;
        let class = frozen::classify_region(p, c_grid)?;
        let region = TfRegion {
            in_e_unique: class.in_e_unique,
            in_e_les_sufficient: class.in_e_les_sufficient,
            in_e_0: class.in_e_0,
            in_e_ges_small_eps: class.in_e_ges_small_eps,
            no_spiking_condition: class.in_e_0 && frozen::no_spiking_condition(p)?,
            piecewise_spiking_condition: frozen::piecewise_spiking_condition(p),
        };
        put(out, "out", region)
    })
}

/// # Safety
/// `p` must be a live handle; `kappa_star` and `c_star` must be valid for
/// writes.
#[no_mangle]
pub unsafe extern "C" fn tf_kappa_threshold(
    p: *const TfParams,
    tol: f64,
    kappa_star: *mut f64,
    c_star: *mut f64,
) -> TfStatus {
    guard(|| {
        let th = singular::kappa_threshold(params(p)?, tol)?;
        put(kappa_star, "kappa_star", th.kappa_star)?;
        put(c_star, "c_star", th.c_star)
    })
}

/// Sets `*reaches_c1` when the `X_up` arc from rest reaches `C_1` first.
///
/// # Safety
/// `p` must be a live handle; `reaches_c1` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_check_theorem3(p: *const TfParams, kappa: f64, reaches_c1: *mut bool) -> TfStatus {
    guard(|| {
        let v = singular::check_theorem3(params(p)?, kappa)?;
        put(reaches_c1, "reaches_c1", v)
    })
}

/// Escaping two-leg construction. `landing_c` receives the `c` of the fold
/// hit, or NaN when there is none. `landing_c` may be null.
///
/// # Safety
/// `p` must be a live handle; `holds` must be valid for writes; `landing_c`
/// must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_check_assumption_e(
    p: *const TfParams,
    kappa: f64,
    holds: *mut bool,
    landing_c: *mut f64,
) -> TfStatus {
    guard(|| {
        let e = singular::check_assumption_e(params(p)?, kappa)?;
        put(holds, "holds", e.holds)?;
        if !landing_c.is_null() {
            landing_c.write(e.landing.map_or(f64::NAN, |(_, c)| c));
        }
        Ok(())
    })
}

/// Integrates from `(v0, w0)` over `[0, t_final]`. `integrator` may be null
/// for the defaults.
///
/// # Safety
/// `p` must be a live handle; `drive` must be valid for reads; `integrator`
/// must be null or valid for reads; `out` must be valid for writes. On
/// success `*out` is released with [`tf_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn tf_simulate(
    p: *const TfParams,
    drive: *const TfDrive,
    v0: f64,
    w0: f64,
    t_final: f64,
    integrator: *const TfIntegrator,
    out: *mut *mut TfTrajectory,
) -> TfStatus {
    guard(|| {
        let p = params(p)?;
        let drive = drive.as_ref().ok_or_else(|| null("drive"))?.to_drive();
        let cfg = match integrator.as_ref() {
            Some(i) => i.to_config()?,
            None => IntegratorConfig::default(),
        };
        if out.is_null() {
            return Err(null("out"));
        }
        let traj = sim::simulate(p, &drive, State::new(v0, w0), t_final, &cfg)?;
        out.write(Box::into_raw(Box::new(TfTrajectory(traj))));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a handle from [`tf_simulate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn tf_trajectory_free(t: *mut TfTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// # Safety
/// `t` must be a live handle; `len` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_trajectory_len(t: *const TfTrajectory, len: *mut usize) -> TfStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        put(len, "len", t.0.len())
    })
}

/// Copies the samples into caller buffers of `capacity` elements each.
/// Returns `BufferTooSmall` (copying nothing) when `capacity` is short.
///
/// # Safety
/// `traj` must be a live handle; `t`, `v` and `w` must each be valid for
/// `capacity` writes.
#[no_mangle]
pub unsafe extern "C" fn tf_trajectory_copy(
    traj: *const TfTrajectory,
    t: *mut f64,
    v: *mut f64,
    w: *mut f64,
    capacity: usize,
) -> TfStatus {
    guard(|| {
        let traj = &traj.as_ref().ok_or_else(|| null("trajectory"))?.0;
        if t.is_null() || v.is_null() || w.is_null() {
            return Err(null("t, v or w"));
        }
        let n = traj.len();
        if capacity < n {
            return Err(TfError(
                TfStatus::BufferTooSmall,
                format!("capacity {capacity} < trajectory length {n}"),
            ));
        }
        ptr::copy_nonoverlapping(traj.t().as_ptr(), t, n);
        ptr::copy_nonoverlapping(traj.v().as_ptr(), v, n);
        ptr::copy_nonoverlapping(traj.w().as_ptr(), w, n);
        Ok(())
    })
}

/// Default detector levels: fire at 0, re-arm at `v_e(-1) / 2`.
///
/// # Safety
/// `p` must be a live handle; `arm` and `fire` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_spike_levels_default(p: *const TfParams, arm: *mut f64, fire: *mut f64) -> TfStatus {
    guard(|| {
        let l = sim::SpikeLevels::default_for(params(p)?);
        put(arm, "arm", l.arm)?;
        put(fire, "fire", l.fire)
    })
}

/// Hysteresis spike count with `arm < fire`.
///
/// # Safety
/// `t` must be a live handle; `count` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tf_count_spikes(
    t: *const TfTrajectory,
    arm: f64,
    fire: f64,
    count: *mut usize,
) -> TfStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        let r = sim::count_spikes(&t.0, arm, fire)?;
        put(count, "count", r.count)
    })
}
