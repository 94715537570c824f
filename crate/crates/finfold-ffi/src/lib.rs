//! C ABI for the swimmer simulator: opaque handles, integer status codes,
//! and a thread-local error message, so other languages can bind the
//! library without understanding Rust types.
//!
//! Every fallible call returns an [`FfStatus`]; on failure the detailed
//! message is readable through [`ff_last_error`] until the next failing
//! call on the same thread. Handles returned by constructors stay valid
//! until the matching `*_free` call and must not be used concurrently.
//! The C header mirroring this surface is generated into
//! `include/finfold.h` at build time.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use finfold::analysis::{analyze_run, detect_phases, fit_constant_acceleration, fit_steady_speed, fit_turning};
use finfold::calibration::{FreeParameters, PlantConstants};
use finfold::dynamics::{simulate_straight, simulate_turn, FinSchedule, Gait, Trajectory};
use finfold::error::Error;
use finfold::hydro::{FinState, RobotParams};
use finfold::kinematics::MidlineParams;
use finfold::metrics::{cost_of_transport, reynolds, strouhal};

/// Status code returned by every fallible call.
#[repr(i32)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Argument = 3,
    Domain = 4,
    Numeric = 5,
    NoSteadyPhase = 6,
    DegenerateData = 7,
    CircleDegenerate = 8,
    NoOscillation = 9,
    Calibration = 10,
    Config = 11,
    Parse = 12,
    Io = 13,
    Panic = 14,
}

fn status_for(e: &Error) -> FfStatus {
    match e {
        Error::Domain(_) => FfStatus::Domain,
        Error::Argument(_) => FfStatus::Argument,
        Error::NumericalDivergence { .. } => FfStatus::Numeric,
        Error::NoSteadyPhase => FfStatus::NoSteadyPhase,
        Error::DegenerateData(_) => FfStatus::DegenerateData,
        Error::CircleDegenerate => FfStatus::CircleDegenerate,
        Error::NoOscillation(_) => FfStatus::NoOscillation,
        Error::CalibrationFailure(_) => FfStatus::Calibration,
        Error::Config(_) => FfStatus::Config,
        Error::Parse(_) => FfStatus::Parse,
        Error::Io(_) => FfStatus::Io,
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean: String = msg.chars().map(|c| if c == '\0' { ' ' } else { c }).collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(clean).expect("interior nuls replaced");
    });
}

fn fail(status: FfStatus, msg: &str) -> FfStatus {
    set_error(msg);
    status
}

fn fail_with(e: &Error) -> FfStatus {
    set_error(&format!("error[{}]: {e}", e.class()));
    status_for(e)
}

fn guarded(body: impl FnOnce() -> FfStatus) -> FfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail(FfStatus::Panic, "internal panic"),
    }
}

/// Message from the most recent failing call on this thread, empty before
/// the first failure. The pointer stays valid until the next failing call
/// on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn ff_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static nul-terminated string; do not free it.
#[no_mangle]
pub extern "C" fn ff_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

fn fin_from_code(code: i32) -> Result<FinState, Error> {
    match code {
        0 => Ok(FinState::Folded),
        1 => Ok(FinState::Erected),
        other => Err(Error::Argument(format!(
            "unknown fin-state code {other} (0 = folded, 1 = erected)"
        ))),
    }
}

fn fin_code(fin: FinState) -> i32 {
    match fin {
        FinState::Folded => 0,
        FinState::Erected => 1,
    }
}

/// Opaque simulator model: plant constants plus fitted coefficients.
pub struct FfModel {
    robot: RobotParams,
    base: MidlineParams,
}

/// Opaque simulated or ingested run record.
pub struct FfTrajectory {
    inner: Trajectory,
}

fn new_model(fp: &FreeParameters, plant: &PlantConstants) -> FfModel {
    FfModel {
        robot: fp.robot_params(plant),
        base: fp.base_midline(plant),
    }
}

/// Model with the shipped default coefficients. Never fails; release with
/// `ff_model_free`.
#[no_mangle]
pub extern "C" fn ff_model_default() -> *mut FfModel {
    Box::into_raw(Box::new(new_model(
        &FreeParameters::default(),
        &PlantConstants::default(),
    )))
}

/// Model from the JSON text written by the calibrator (extra bookkeeping
/// keys are ignored, unknown coefficient names rejected). On success stores
/// a new handle in `out`.
///
/// # Safety
/// `json` must point to a nul-terminated string and `out` to a writable
/// pointer slot; both stay borrowed only for the duration of the call.
#[no_mangle]
pub unsafe extern "C" fn ff_model_from_json(
    json: *const c_char,
    out: *mut *mut FfModel,
) -> FfStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return fail(FfStatus::NullPointer, "ff_model_from_json: null pointer");
        }
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(text) => text,
            Err(_) => return fail(FfStatus::InvalidUtf8, "model JSON is not valid UTF-8"),
        };
        match FreeParameters::from_calibration_json(text) {
            Ok(fp) => {
                let handle = Box::into_raw(Box::new(new_model(&fp, &PlantConstants::default())));
                unsafe { *out = handle };
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Release a model handle. Null is ignored.
///
/// # Safety
/// `model` must be a handle from `ff_model_default` or
/// `ff_model_from_json` that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ff_model_free(model: *mut FfModel) {
    if !model.is_null() {
        drop(unsafe { Box::from_raw(model) });
    }
}

fn gait(frequency_hz: f64, amplitude_deg: f64, bias_deg: f64) -> Gait {
    Gait {
        frequency: frequency_hz,
        amplitude_command: amplitude_deg,
        turn_bias: bias_deg,
    }
}

/// Simulate a straight run under a fin schedule given as parallel arrays of
/// switch times (seconds, first must be 0) and fin-state codes (0 = folded,
/// 1 = erected). `n_switches == 0` means fins folded throughout. On success
/// stores a new trajectory handle in `out`; release it with
/// `ff_trajectory_free`.
///
/// # Safety
/// `model` must be a live model handle; `switch_times_s` and
/// `switch_states` must point to `n_switches` readable elements when
/// `n_switches > 0`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_simulate_straight(
    model: *const FfModel,
    frequency_hz: f64,
    amplitude_deg: f64,
    switch_times_s: *const f64,
    switch_states: *const i32,
    n_switches: usize,
    duration_s: f64,
    dt_s: f64,
    out: *mut *mut FfTrajectory,
) -> FfStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return fail(FfStatus::NullPointer, "ff_simulate_straight: null pointer");
        }
        let schedule = if n_switches == 0 {
            FinSchedule::constant(FinState::Folded)
        } else {
            if switch_times_s.is_null() || switch_states.is_null() {
                return fail(FfStatus::NullPointer, "ff_simulate_straight: null schedule array");
            }
            let times = unsafe { std::slice::from_raw_parts(switch_times_s, n_switches) };
            let codes = unsafe { std::slice::from_raw_parts(switch_states, n_switches) };
            let mut entries = Vec::with_capacity(n_switches);
            for (&t, &code) in times.iter().zip(codes) {
                match fin_from_code(code) {
                    Ok(fin) => entries.push((t, fin)),
                    Err(e) => return fail_with(&e),
                }
            }
            match FinSchedule::new(entries) {
                Ok(schedule) => schedule,
                Err(e) => return fail_with(&e),
            }
        };
        let m = unsafe { &*model };
        match simulate_straight(
            &m.robot,
            &m.base,
            &gait(frequency_hz, amplitude_deg, 0.0),
            &schedule,
            duration_s,
            dt_s,
        ) {
            Ok(traj) => {
                unsafe { *out = Box::into_raw(Box::new(FfTrajectory { inner: traj })) };
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Simulate a planar turn with a constant fin state (0 = folded,
/// 1 = erected) and a nonzero tail bias. On success stores a new trajectory
/// handle in `out`.
///
/// # Safety
/// `model` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_simulate_turn(
    model: *const FfModel,
    frequency_hz: f64,
    amplitude_deg: f64,
    bias_deg: f64,
    fin_state: i32,
    duration_s: f64,
    dt_s: f64,
    out: *mut *mut FfTrajectory,
) -> FfStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return fail(FfStatus::NullPointer, "ff_simulate_turn: null pointer");
        }
        let fin = match fin_from_code(fin_state) {
            Ok(fin) => fin,
            Err(e) => return fail_with(&e),
        };
        let m = unsafe { &*model };
        match simulate_turn(
            &m.robot,
            &m.base,
            &gait(frequency_hz, amplitude_deg, bias_deg),
            fin,
            duration_s,
            dt_s,
        ) {
            Ok(traj) => {
                unsafe { *out = Box::into_raw(Box::new(FfTrajectory { inner: traj })) };
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// One integrator sample. `fin` is 0 folded, 1 erected.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct FfSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub fin: i32,
    pub p_caudal_w: f64,
    pub p_dorsal_w: f64,
}

/// Number of samples in a trajectory; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn ff_trajectory_len(traj: *const FfTrajectory) -> usize {
    if traj.is_null() {
        0
    } else {
        unsafe { &*traj }.inner.samples().len()
    }
}

/// Sampling interval of a trajectory, s; 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live trajectory handle.
#[no_mangle]
pub unsafe extern "C" fn ff_trajectory_dt(traj: *const FfTrajectory) -> f64 {
    if traj.is_null() {
        0.0
    } else {
        unsafe { &*traj }.inner.dt()
    }
}

/// Copy sample `index` into `out`.
///
/// # Safety
/// `traj` must be a live trajectory handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_trajectory_sample(
    traj: *const FfTrajectory,
    index: usize,
    out: *mut FfSample,
) -> FfStatus {
    guarded(|| {
        if traj.is_null() || out.is_null() {
            return fail(FfStatus::NullPointer, "ff_trajectory_sample: null pointer");
        }
        let samples = unsafe { &*traj }.inner.samples();
        let Some(s) = samples.get(index) else {
            return fail(
                FfStatus::Argument,
                &format!("sample index {index} out of range (len {})", samples.len()),
            );
        };
        unsafe {
            *out = FfSample {
                t: s.t,
                x: s.x,
                y: s.y,
                heading: s.heading,
                speed: s.speed,
                fin: fin_code(s.fin),
                p_caudal_w: s.p_caudal,
                p_dorsal_w: s.p_dorsal,
            };
        }
        FfStatus::Ok
    })
}

/// Release a trajectory handle. Null is ignored.
///
/// # Safety
/// `traj` must be a handle from a simulate call that has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn ff_trajectory_free(traj: *mut FfTrajectory) {
    if !traj.is_null() {
        drop(unsafe { Box::from_raw(traj) });
    }
}

/// Burst-phase regression result.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct FfAccelFit {
    /// Fitted constant acceleration, m/s^2.
    pub accel_mps2: f64,
    /// Coefficient of determination of the through-origin quadratic fit.
    pub r_squared: f64,
    /// Length of the fitted window, s.
    pub window_s: f64,
}

/// Full straight-run analysis: burst fit plus cruise speed.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct FfRunAnalysis {
    /// Detected end of the acceleration phase, s.
    pub t_accel_end_s: f64,
    pub accel: FfAccelFit,
    /// Cruise speed regressed over the settled phase, m/s.
    pub steady_speed_mps: f64,
}

/// Fitted steady turn.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct FfTurnFit {
    /// Circle radius, m.
    pub radius_m: f64,
    /// Signed yaw rate, rad/s (positive = counterclockwise).
    pub angular_speed_radps: f64,
    pub center_x_m: f64,
    pub center_y_m: f64,
    /// Root-mean-square radial misfit, m.
    pub residual_rms_m: f64,
}

/// Detect the end of the acceleration phase of a straight run and store it
/// in `out_t_s`.
///
/// # Safety
/// `traj` must be a live trajectory handle and `out_t_s` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_detect_phases(
    traj: *const FfTrajectory,
    out_t_s: *mut f64,
) -> FfStatus {
    guarded(|| {
        if traj.is_null() || out_t_s.is_null() {
            return fail(FfStatus::NullPointer, "ff_detect_phases: null pointer");
        }
        match detect_phases(&unsafe { &*traj }.inner) {
            Ok(t) => {
                unsafe { *out_t_s = t };
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Fit a constant acceleration over the record up to `until_s`
/// (`until_s <= 0` fits the whole record).
///
/// # Safety
/// `traj` must be a live trajectory handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_fit_acceleration(
    traj: *const FfTrajectory,
    until_s: f64,
    out: *mut FfAccelFit,
) -> FfStatus {
    guarded(|| {
        if traj.is_null() || out.is_null() {
            return fail(FfStatus::NullPointer, "ff_fit_acceleration: null pointer");
        }
        let inner = &unsafe { &*traj }.inner;
        let fit = if until_s > 0.0 {
            inner
                .slice_until(until_s)
                .and_then(|w| fit_constant_acceleration(&w))
        } else {
            fit_constant_acceleration(inner)
        };
        match fit {
            Ok(fit) => {
                unsafe {
                    *out = FfAccelFit {
                        accel_mps2: fit.accel,
                        r_squared: fit.r_squared,
                        window_s: fit.window,
                    };
                }
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Regress the cruise speed over the record from `from_s` on
/// (`from_s <= 0` uses the whole record) and store it in `out_speed_mps`.
///
/// # Safety
/// `traj` must be a live trajectory handle and `out_speed_mps` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_fit_steady_speed(
    traj: *const FfTrajectory,
    from_s: f64,
    out_speed_mps: *mut f64,
) -> FfStatus {
    guarded(|| {
        if traj.is_null() || out_speed_mps.is_null() {
            return fail(FfStatus::NullPointer, "ff_fit_steady_speed: null pointer");
        }
        let inner = &unsafe { &*traj }.inner;
        let speed = if from_s > 0.0 {
            inner.slice_from(from_s).and_then(|w| fit_steady_speed(&w))
        } else {
            fit_steady_speed(inner)
        };
        match speed {
            Ok(speed) => {
                unsafe { *out_speed_mps = speed };
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Split a straight run into burst and cruise phases and fit both.
///
/// # Safety
/// `traj` must be a live trajectory handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_analyze_run(
    traj: *const FfTrajectory,
    out: *mut FfRunAnalysis,
) -> FfStatus {
    guarded(|| {
        if traj.is_null() || out.is_null() {
            return fail(FfStatus::NullPointer, "ff_analyze_run: null pointer");
        }
        match analyze_run(&unsafe { &*traj }.inner) {
            Ok(run) => {
                unsafe {
                    *out = FfRunAnalysis {
                        t_accel_end_s: run.t_accel_end,
                        accel: FfAccelFit {
                            accel_mps2: run.accel.accel,
                            r_squared: run.accel.r_squared,
                            window_s: run.accel.window,
                        },
                        steady_speed_mps: run.steady_speed,
                    };
                }
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Fit a turning circle to the record from `trim_s` on (`trim_s <= 0` uses
/// the whole record).
///
/// # Safety
/// `traj` must be a live trajectory handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ff_fit_turning(
    traj: *const FfTrajectory,
    trim_s: f64,
    out: *mut FfTurnFit,
) -> FfStatus {
    guarded(|| {
        if traj.is_null() || out.is_null() {
            return fail(FfStatus::NullPointer, "ff_fit_turning: null pointer");
        }
        let inner = &unsafe { &*traj }.inner;
        let fit = if trim_s > 0.0 {
            inner.slice_from(trim_s).and_then(|w| fit_turning(&w))
        } else {
            fit_turning(inner)
        };
        match fit {
            Ok(fit) => {
                unsafe {
                    *out = FfTurnFit {
                        radius_m: fit.radius,
                        angular_speed_radps: fit.angular_speed,
                        center_x_m: fit.center.0,
                        center_y_m: fit.center.1,
                        residual_rms_m: fit.residual_rms,
                    };
                }
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Cost of transport `P / (m g U)`, dimensionless, stored in `out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_cost_of_transport(
    mean_power_w: f64,
    mass_kg: f64,
    mean_speed_mps: f64,
    out: *mut f64,
) -> FfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FfStatus::NullPointer, "ff_cost_of_transport: null pointer");
        }
        match cost_of_transport(mean_power_w, mass_kg, mean_speed_mps) {
            Ok(cot) => {
                unsafe { *out = cot };
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Strouhal number `f A / U`, dimensionless, stored in `out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ff_strouhal(
    frequency_hz: f64,
    peak_to_peak_m: f64,
    speed_mps: f64,
    out: *mut f64,
) -> FfStatus {
    guarded(|| {
        if out.is_null() {
            return fail(FfStatus::NullPointer, "ff_strouhal: null pointer");
        }
        match strouhal(frequency_hz, peak_to_peak_m, speed_mps) {
            Ok(st) => {
                unsafe { *out = st.value };
                FfStatus::Ok
            }
            Err(e) => fail_with(&e),
        }
    })
}

/// Reynolds number `U L / nu`, dimensionless.
#[no_mangle]
pub extern "C" fn ff_reynolds(speed_mps: f64, length_m: f64, viscosity_m2ps: f64) -> f64 {
    reynolds(speed_mps, length_m, viscosity_m2ps)
}
