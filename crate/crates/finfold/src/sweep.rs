//! Frequency-grid performance sweeps over both fin states.
//!
//! Grid frequencies are integer millihertz so sweep definitions hash and
//! order exactly; a cell's failure is captured in its outcome rather than
//! aborting the rest of the grid.

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze_run, fit_turning};
use crate::dynamics::{
    effective_midline, simulate_straight, simulate_turn, FinSchedule, Gait, DEFAULT_DT,
};
use crate::error::Result;
use crate::hydro::{FinState, RobotParams};
use crate::kinematics::MidlineParams;
use crate::metrics::{
    cost_of_transport, cot_split, reynolds, strouhal, SwimMetrics, KINEMATIC_VISCOSITY_WATER,
};

/// Per-cell run settings for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunOptions {
    /// Integration step, s.
    pub dt: f64,
    /// Straight-run duration, s.
    pub straight_duration: f64,
    /// Turning-run duration, s.
    pub turn_duration: f64,
    /// Leading stretch of the turning run dropped before fitting, s.
    pub turn_trim: f64,
    /// Tail bias used for the turning run, deg.
    pub turn_bias: f64,
    /// Tail-beat amplitude command, deg.
    pub amplitude: f64,
    /// Skip the turning runs entirely when false.
    pub with_turns: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            dt: DEFAULT_DT,
            straight_duration: 30.0,
            turn_duration: 60.0,
            turn_trim: 20.0,
            turn_bias: 30.0,
            amplitude: 20.0,
            with_turns: true,
        }
    }
}

/// One completed sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    /// Tail-beat frequency, mHz.
    pub f_mhz: u32,
    /// Tail-beat frequency, Hz.
    pub f_hz: f64,
    pub fin: FinState,
    /// End of the acceleration phase in the straight run, s.
    pub t_accel_end: f64,
    /// Fitted cruise speed from the settled phase, m/s.
    pub steady_speed: f64,
    pub metrics: SwimMetrics,
    /// Mean path speed over the fitted stretch of the turning run, m/s.
    pub turn_mean_speed: Option<f64>,
    /// Soft irregularities (for example a turning fit that failed while the
    /// straight-run pipeline succeeded).
    pub notes: Vec<String>,
}

/// A cell's identity plus its result, failed or not.
#[derive(Debug)]
pub struct CellOutcome {
    pub f_mhz: u32,
    pub fin: FinState,
    pub result: Result<CellResult>,
}

fn compute_cell(
    robot: &RobotParams,
    base: &MidlineParams,
    f_mhz: u32,
    fin: FinState,
    opts: &RunOptions,
) -> Result<CellResult> {
    let f_hz = f_mhz as f64 / 1000.0;
    let gait = Gait {
        frequency: f_hz,
        amplitude_command: opts.amplitude,
        turn_bias: 0.0,
    };
    let straight = simulate_straight(
        robot,
        base,
        &gait,
        &FinSchedule::constant(fin),
        opts.straight_duration,
        opts.dt,
    )?;
    let run = analyze_run(&straight)?;

    let mean_speed = straight.mean_speed_over_ground();
    let mean_power = straight.mean_power();
    let (p_caudal, p_dorsal) = straight.mean_power_split();
    let cot_total = cost_of_transport(mean_power, robot.mass, mean_speed)?;
    let (cot_caudal, cot_dorsal) = cot_split(p_caudal, p_dorsal, robot.mass, mean_speed)?;
    let midline = effective_midline(base, robot, &gait, fin)?;
    let st = strouhal(f_hz, midline.peak_to_peak_amplitude(), run.steady_speed)?;
    let re = reynolds(run.steady_speed, robot.body_length, KINEMATIC_VISCOSITY_WATER);

    let mut notes = Vec::new();
    let mut turn = None;
    let mut turn_mean_speed = None;
    if opts.with_turns {
        let turn_gait = Gait {
            frequency: f_hz,
            amplitude_command: opts.amplitude,
            turn_bias: opts.turn_bias,
        };
        let fitted = simulate_turn(robot, base, &turn_gait, fin, opts.turn_duration, opts.dt)
            .and_then(|traj| {
                let trimmed = traj.slice_from(opts.turn_trim)?;
                Ok((fit_turning(&trimmed)?, trimmed.mean_speed()))
            });
        match fitted {
            Ok((fit, path_speed)) => {
                turn = Some(fit);
                turn_mean_speed = Some(path_speed);
            }
            Err(e) => notes.push(format!("turn fit unavailable: error[{}]: {e}", e.class())),
        }
    }

    Ok(CellResult {
        f_mhz,
        f_hz,
        fin,
        t_accel_end: run.t_accel_end,
        steady_speed: run.steady_speed,
        metrics: SwimMetrics {
            mean_speed,
            mean_power,
            cot_total,
            cot_caudal,
            cot_dorsal,
            strouhal: st.value,
            st_in_optimal_range: st.in_optimal_range,
            reynolds: re,
            accel: run.accel.accel,
            accel_r_squared: run.accel.r_squared,
            turn,
        },
        turn_mean_speed,
        notes,
    })
}

fn grid_pairs(grid_mhz: &[u32], states: &[FinState]) -> Vec<(u32, FinState)> {
    grid_mhz
        .iter()
        .flat_map(|&mhz| states.iter().map(move |&fin| (mhz, fin)))
        .collect()
}

/// Run every `(frequency, fin state)` cell in parallel. Cell order in the
/// result is frequency-major over `grid_mhz` then `states`, identical to
/// [`run_grid_serial`]; so are the numbers, since cells are independent.
pub fn run_grid(
    robot: &RobotParams,
    base: &MidlineParams,
    grid_mhz: &[u32],
    states: &[FinState],
    opts: &RunOptions,
) -> Vec<CellOutcome> {
    grid_pairs(grid_mhz, states)
        .into_par_iter()
        .map(|(f_mhz, fin)| CellOutcome {
            f_mhz,
            fin,
            result: compute_cell(robot, base, f_mhz, fin, opts),
        })
        .collect()
}

/// Single-threaded variant of [`run_grid`].
pub fn run_grid_serial(
    robot: &RobotParams,
    base: &MidlineParams,
    grid_mhz: &[u32],
    states: &[FinState],
    opts: &RunOptions,
) -> Vec<CellOutcome> {
    grid_pairs(grid_mhz, states)
        .into_iter()
        .map(|(f_mhz, fin)| CellOutcome {
            f_mhz,
            fin,
            result: compute_cell(robot, base, f_mhz, fin, opts),
        })
        .collect()
}
