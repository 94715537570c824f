//! Exercises the C ABI exactly as a foreign caller would: through raw
//! pointers, status codes, and the thread-local error message.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use finfold_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ff_last_error()) }
        .to_str()
        .expect("error messages are UTF-8")
        .to_string()
}

fn simulate(model: *const FfModel, frequency: f64, duration: f64) -> *mut FfTrajectory {
    let mut traj: *mut FfTrajectory = ptr::null_mut();
    let status = unsafe {
        ff_simulate_straight(
            model,
            frequency,
            20.0,
            ptr::null(),
            ptr::null(),
            0,
            duration,
            0.002,
            &mut traj,
        )
    };
    assert_eq!(status, FfStatus::Ok, "{}", last_error());
    assert!(!traj.is_null());
    traj
}

#[test]
fn straight_run_round_trip() {
    let model = ff_model_default();
    assert!(!model.is_null());
    let traj = simulate(model, 2.6, 30.0);

    let n = unsafe { ff_trajectory_len(traj) };
    assert_eq!(n, 15001);
    assert!((unsafe { ff_trajectory_dt(traj) } - 0.002).abs() < 1e-15);

    let mut first = FfSample {
        t: -1.0,
        x: -1.0,
        y: -1.0,
        heading: -1.0,
        speed: -1.0,
        fin: -1,
        p_caudal_w: -1.0,
        p_dorsal_w: -1.0,
    };
    let mut last = first;
    assert_eq!(unsafe { ff_trajectory_sample(traj, 0, &mut first) }, FfStatus::Ok);
    assert_eq!(unsafe { ff_trajectory_sample(traj, n - 1, &mut last) }, FfStatus::Ok);
    assert_eq!(first.t, 0.0);
    assert_eq!(first.speed, 0.0);
    assert_eq!(first.fin, 0);
    assert!((last.t - 30.0).abs() < 1e-9);
    assert!(last.speed > 0.3 && last.speed < 0.4);
    assert!(last.x > 5.0);
    assert!(last.p_caudal_w > 0.0);

    let mut run = FfRunAnalysis {
        t_accel_end_s: 0.0,
        accel: FfAccelFit {
            accel_mps2: 0.0,
            r_squared: 0.0,
            window_s: 0.0,
        },
        steady_speed_mps: 0.0,
    };
    assert_eq!(unsafe { ff_analyze_run(traj, &mut run) }, FfStatus::Ok);
    assert!(run.t_accel_end_s > 1.0 && run.t_accel_end_s < 15.0);
    assert!(run.accel.r_squared > 0.95);
    assert!((run.steady_speed_mps - 0.338).abs() < 0.01);

    let mut t_end = 0.0;
    assert_eq!(unsafe { ff_detect_phases(traj, &mut t_end) }, FfStatus::Ok);
    assert_eq!(t_end, run.t_accel_end_s);

    let mut fit = run.accel;
    assert_eq!(unsafe { ff_fit_acceleration(traj, t_end, &mut fit) }, FfStatus::Ok);
    assert_eq!(fit.accel_mps2, run.accel.accel_mps2);

    let mut cruise = 0.0;
    assert_eq!(
        unsafe { ff_fit_steady_speed(traj, t_end + 1.0, &mut cruise) },
        FfStatus::Ok
    );
    assert_eq!(cruise, run.steady_speed_mps);

    unsafe {
        ff_trajectory_free(traj);
        ff_model_free(model);
    }
}

#[test]
fn scheduled_fold_switches_the_fin_code() {
    let model = ff_model_default();
    let times = [0.0, 5.0];
    let states = [1_i32, 0];
    let mut traj: *mut FfTrajectory = ptr::null_mut();
    let status = unsafe {
        ff_simulate_straight(
            model,
            2.6,
            20.0,
            times.as_ptr(),
            states.as_ptr(),
            2,
            10.0,
            0.002,
            &mut traj,
        )
    };
    assert_eq!(status, FfStatus::Ok, "{}", last_error());

    let mut early = FfSample {
        t: 0.0,
        x: 0.0,
        y: 0.0,
        heading: 0.0,
        speed: 0.0,
        fin: 0,
        p_caudal_w: 0.0,
        p_dorsal_w: 0.0,
    };
    let mut late = early;
    assert_eq!(unsafe { ff_trajectory_sample(traj, 1000, &mut early) }, FfStatus::Ok);
    assert_eq!(unsafe { ff_trajectory_sample(traj, 4000, &mut late) }, FfStatus::Ok);
    assert_eq!(early.fin, 1);
    assert_eq!(late.fin, 0);

    unsafe {
        ff_trajectory_free(traj);
        ff_model_free(model);
    }
}

#[test]
fn turn_fit_matches_the_kinematics() {
    let model = ff_model_default();
    let mut traj: *mut FfTrajectory = ptr::null_mut();
    let status =
        unsafe { ff_simulate_turn(model, 2.0, 20.0, 30.0, 1, 60.0, 0.002, &mut traj) };
    assert_eq!(status, FfStatus::Ok, "{}", last_error());

    let mut fit = FfTurnFit {
        radius_m: 0.0,
        angular_speed_radps: 0.0,
        center_x_m: 0.0,
        center_y_m: 0.0,
        residual_rms_m: 0.0,
    };
    assert_eq!(unsafe { ff_fit_turning(traj, 20.0, &mut fit) }, FfStatus::Ok);
    assert!(fit.radius_m > 0.1 && fit.radius_m < 5.0);
    assert!(fit.angular_speed_radps.abs() > 0.05);
    assert!(fit.residual_rms_m < 0.01);

    let n = unsafe { ff_trajectory_len(traj) };
    let mut s = FfSample {
        t: 0.0,
        x: 0.0,
        y: 0.0,
        heading: 0.0,
        speed: 0.0,
        fin: 0,
        p_caudal_w: 0.0,
        p_dorsal_w: 0.0,
    };
    assert_eq!(unsafe { ff_trajectory_sample(traj, n - 1, &mut s) }, FfStatus::Ok);
    let kinematic = fit.radius_m * fit.angular_speed_radps.abs();
    assert!(
        (kinematic - s.speed).abs() / s.speed < 0.02,
        "R*omega {kinematic} vs speed {}",
        s.speed
    );

    unsafe {
        ff_trajectory_free(traj);
        ff_model_free(model);
    }
}

#[test]
fn model_json_round_trip_and_rejection() {
    let mut model: *mut FfModel = ptr::null_mut();

    let defaults = CString::new("{}").unwrap();
    assert_eq!(
        unsafe { ff_model_from_json(defaults.as_ptr(), &mut model) },
        FfStatus::Ok
    );
    assert!(!model.is_null());
    unsafe { ff_model_free(model) };

    model = ptr::null_mut();
    let garbage = CString::new("not json at all").unwrap();
    assert_eq!(
        unsafe { ff_model_from_json(garbage.as_ptr(), &mut model) },
        FfStatus::Parse
    );
    assert!(model.is_null());
    assert!(last_error().contains("error[parse]"));

    let unknown = CString::new(r#"{"warp_factor": 9}"#).unwrap();
    assert_eq!(
        unsafe { ff_model_from_json(unknown.as_ptr(), &mut model) },
        FfStatus::Parse
    );

    let invalid = CString::new(vec![0xff_u8, 0xfe]).unwrap();
    assert_eq!(
        unsafe { ff_model_from_json(invalid.as_ptr(), &mut model) },
        FfStatus::InvalidUtf8
    );
}

#[test]
fn error_paths_report_status_and_message() {
    // Null handles.
    assert_eq!(
        unsafe { ff_detect_phases(ptr::null(), &mut 0.0) },
        FfStatus::NullPointer
    );
    assert!(last_error().contains("null pointer"));
    assert_eq!(unsafe { ff_trajectory_len(ptr::null()) }, 0);

    let model = ff_model_default();

    // Bad fin code.
    let mut traj: *mut FfTrajectory = ptr::null_mut();
    assert_eq!(
        unsafe { ff_simulate_turn(model, 2.0, 20.0, 30.0, 7, 10.0, 0.002, &mut traj) },
        FfStatus::Argument
    );
    assert!(last_error().contains("fin-state code 7"), "{}", last_error());

    // A turn needs a nonzero bias.
    assert_eq!(
        unsafe { ff_simulate_turn(model, 2.0, 20.0, 0.0, 0, 10.0, 0.002, &mut traj) },
        FfStatus::Argument
    );

    // Schedules must start at zero.
    let times = [1.0];
    let states = [0_i32];
    assert_eq!(
        unsafe {
            ff_simulate_straight(
                model,
                2.6,
                20.0,
                times.as_ptr(),
                states.as_ptr(),
                1,
                10.0,
                0.002,
                &mut traj,
            )
        },
        FfStatus::Argument
    );

    // Out-of-range sample index.
    let traj = simulate(model, 2.6, 10.0);
    let mut sample = FfSample {
        t: 0.0,
        x: 0.0,
        y: 0.0,
        heading: 0.0,
        speed: 0.0,
        fin: 0,
        p_caudal_w: 0.0,
        p_dorsal_w: 0.0,
    };
    assert_eq!(
        unsafe { ff_trajectory_sample(traj, 1_000_000, &mut sample) },
        FfStatus::Argument
    );
    assert!(last_error().contains("out of range"));

    // Domain errors in the metric helpers.
    let mut value = 0.0;
    assert_eq!(
        unsafe { ff_cost_of_transport(1.0, 0.0, 0.3, &mut value) },
        FfStatus::Domain
    );
    assert_eq!(
        unsafe { ff_strouhal(2.6, 0.13, 0.0, &mut value) },
        FfStatus::Domain
    );

    unsafe {
        ff_trajectory_free(traj);
        ff_model_free(model);
    }
}

#[test]
fn spot_values_match_through_the_abi() {
    let mut cot = 0.0;
    assert_eq!(
        unsafe { ff_cost_of_transport(2.0, 2.305, 0.338, &mut cot) },
        FfStatus::Ok
    );
    assert!((cot - 0.2617).abs() <= 1e-4);

    let mut st = 0.0;
    assert_eq!(unsafe { ff_strouhal(2.6, 0.13, 0.338, &mut st) }, FfStatus::Ok);
    assert!((st - 1.0).abs() <= 1e-12);

    assert!((ff_reynolds(0.338, 0.57, 1e-6) - 192_660.0).abs() <= 1.0);

    let version: *const c_char = ff_version();
    let text = unsafe { CStr::from_ptr(version) }.to_str().unwrap();
    assert!(!text.is_empty());
}

#[test]
fn generated_header_covers_the_surface() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/finfold.h"
    ))
    .expect("build script generates include/finfold.h");
    for needle in [
        "typedef struct FfModel FfModel;",
        "typedef struct FfTrajectory FfTrajectory;",
        "FF_STATUS_OK = 0",
        "ff_model_default",
        "ff_model_from_json",
        "ff_simulate_straight",
        "ff_simulate_turn",
        "ff_trajectory_sample",
        "ff_analyze_run",
        "ff_fit_turning",
        "ff_cost_of_transport",
        "ff_last_error",
        "ff_version",
    ] {
        assert!(header.contains(needle), "header is missing {needle}");
    }
}
