//! Self-propelled longitudinal and yaw-plane dynamics under a gait and a fin
//! schedule, integrated with fixed-step fourth-order Runge-Kutta.
//!
//! The fin state is frozen over each integration step (sampled at the step
//! start), so a schedule switch never lands inside a Runge-Kutta stage; with
//! switch times on the step grid the integrator keeps its full order on each
//! smooth segment.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydro::{self, FinState, RobotParams};
use crate::kinematics::MidlineParams;

/// Commanded tail-beat pattern.
///
/// The amplitude command is the servo half-amplitude in degrees; the
/// calibrated midline envelope is defined at a 20 degree command and scales
/// linearly with it. `turn_bias` is a constant asymmetric offset (degrees)
/// added to the servo waveform to command a turn; its sign picks the turn
/// direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gait {
    /// Tail-beat frequency, Hz.
    pub frequency: f64,
    /// Servo half-amplitude command, deg. Valid range [0, 45].
    pub amplitude_command: f64,
    /// Asymmetric turn offset, deg. Valid range [-45, 45].
    pub turn_bias: f64,
}

/// Amplitude command at which the calibrated envelope is defined, deg.
pub const REFERENCE_AMPLITUDE_DEG: f64 = 20.0;

impl Gait {
    pub fn validate(&self) -> Result<()> {
        if !(self.frequency.is_finite() && self.frequency > 0.0) {
            return Err(Error::Domain(format!(
                "gait frequency must be positive, got {}",
                self.frequency
            )));
        }
        if !(self.amplitude_command.is_finite()
            && (0.0..=45.0).contains(&self.amplitude_command))
        {
            return Err(Error::Domain(format!(
                "amplitude command must lie in [0, 45] deg, got {}",
                self.amplitude_command
            )));
        }
        if !(self.turn_bias.is_finite() && self.turn_bias.abs() <= 45.0) {
            return Err(Error::Domain(format!(
                "turn bias must lie in [-45, 45] deg, got {}",
                self.turn_bias
            )));
        }
        Ok(())
    }
}

/// Timed erect/fold program. Entries are `(time s, state)`, the first entry
/// is at t = 0 and times increase strictly; a switch takes effect exactly at
/// its listed time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, FinState)>", into = "Vec<(f64, FinState)>")]
pub struct FinSchedule {
    entries: Vec<(f64, FinState)>,
}

impl FinSchedule {
    pub fn new(entries: Vec<(f64, FinState)>) -> Result<Self> {
        let Some(first) = entries.first() else {
            return Err(Error::Argument("fin schedule must not be empty".into()));
        };
        if first.0 != 0.0 {
            return Err(Error::Argument(format!(
                "fin schedule must start at t = 0, got t = {}",
                first.0
            )));
        }
        for pair in entries.windows(2) {
            if !(pair[1].0.is_finite() && pair[1].0 > pair[0].0) {
                return Err(Error::Argument(format!(
                    "fin schedule times must increase strictly ({} then {})",
                    pair[0].0, pair[1].0
                )));
            }
        }
        Ok(FinSchedule { entries })
    }

    /// Schedule holding one state for the whole run.
    pub fn constant(fin: FinState) -> Self {
        FinSchedule {
            entries: vec![(0.0, fin)],
        }
    }

    pub fn entries(&self) -> &[(f64, FinState)] {
        &self.entries
    }

    /// State of the last entry at or before `t`.
    pub fn fin_state_at(&self, t: f64) -> Result<FinState> {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::Domain(format!(
                "schedule lookup time must be non-negative, got {t}"
            )));
        }
        let mut state = self.entries[0].1;
        for &(time, fin) in &self.entries {
            if time <= t {
                state = fin;
            } else {
                break;
            }
        }
        Ok(state)
    }

    /// Times of the transitions after the initial entry.
    pub fn switch_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().skip(1).map(|&(t, _)| t)
    }
}

impl TryFrom<Vec<(f64, FinState)>> for FinSchedule {
    type Error = Error;

    fn try_from(entries: Vec<(f64, FinState)>) -> Result<Self> {
        FinSchedule::new(entries)
    }
}

impl From<FinSchedule> for Vec<(f64, FinState)> {
    fn from(s: FinSchedule) -> Self {
        s.entries
    }
}

/// One integrator output sample. Positions are world-frame meters, heading is
/// radians, powers are watts split by servo channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub speed: f64,
    pub fin: FinState,
    pub p_caudal: f64,
    pub p_dorsal: f64,
}

impl Sample {
    /// Total electrical draw, W.
    pub fn power(&self) -> f64 {
        self.p_caudal + self.p_dorsal
    }
}

/// Uniformly sampled simulation or tracking record.
///
/// Invariants: at least two samples, constant time step `dt`, non-negative
/// speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    dt: f64,
    samples: Vec<Sample>,
}

impl Trajectory {
    pub fn new(dt: f64, samples: Vec<Sample>) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Argument(format!(
                "trajectory time step must be positive, got {dt}"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::Argument(format!(
                "trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for pair in samples.windows(2) {
            let step = pair[1].t - pair[0].t;
            if (step - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(Error::Argument(format!(
                    "non-uniform timestamps: step {step} at t = {} (expected {dt})",
                    pair[0].t
                )));
            }
        }
        for s in &samples {
            if !(s.speed.is_finite() && s.speed >= 0.0) {
                return Err(Error::Argument(format!(
                    "speed must be non-negative, got {} at t = {}",
                    s.speed, s.t
                )));
            }
        }
        Ok(Trajectory { dt, samples })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Sub-record from the first sample at or after `from_t` onward.
    pub fn slice_from(&self, from_t: f64) -> Result<Trajectory> {
        let start = self
            .samples
            .iter()
            .position(|s| s.t >= from_t - 1e-12)
            .ok_or_else(|| {
                Error::Argument(format!("no samples at or after t = {from_t}"))
            })?;
        Trajectory::new(self.dt, self.samples[start..].to_vec())
    }

    /// Sub-record from the start through the last sample at or before `to_t`.
    pub fn slice_until(&self, to_t: f64) -> Result<Trajectory> {
        let end = self
            .samples
            .iter()
            .rposition(|s| s.t <= to_t + 1e-12)
            .ok_or_else(|| {
                Error::Argument(format!("no samples at or before t = {to_t}"))
            })?;
        Trajectory::new(self.dt, self.samples[..=end].to_vec())
    }

    /// Net path-aligned mean speed over the record, m/s: chord displacement
    /// divided by elapsed time.
    pub fn mean_speed_over_ground(&self) -> f64 {
        let a = &self.samples[0];
        let b = &self.samples[self.samples.len() - 1];
        ((b.x - a.x).powi(2) + (b.y - a.y).powi(2)).sqrt() / (b.t - a.t)
    }

    /// Arithmetic mean of the sampled speeds, m/s.
    pub fn mean_speed(&self) -> f64 {
        self.samples.iter().map(|s| s.speed).sum::<f64>() / self.samples.len() as f64
    }

    /// Arithmetic mean of the sampled total power, W.
    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|s| s.power()).sum::<f64>() / self.samples.len() as f64
    }

    /// Arithmetic means of the per-channel powers `(caudal, dorsal)`, W.
    pub fn mean_power_split(&self) -> (f64, f64) {
        let n = self.samples.len() as f64;
        let pc = self.samples.iter().map(|s| s.p_caudal).sum::<f64>() / n;
        let pd = self.samples.iter().map(|s| s.p_dorsal).sum::<f64>() / n;
        (pc, pd)
    }
}

/// Largest admissible integrator step, s. Above this the fixed-step scheme
/// no longer resolves the fastest transients to the advertised accuracy.
pub const MAX_DT: f64 = 0.01;

/// Default integrator step, s.
pub const DEFAULT_DT: f64 = 0.002;

/// Duration over which a fin transition's energy is spread, s.
pub const FIN_TRANSITION_DURATION: f64 = 0.5;

/// Midline actually beaten under `gait` in the given fin state: the base
/// envelope scaled by `amplitude_command / 20 deg` (times the erected
/// envelope gain when erected) at period `1 / frequency`.
pub fn effective_midline(
    base: &MidlineParams,
    robot: &RobotParams,
    gait: &Gait,
    fin: FinState,
) -> Result<MidlineParams> {
    gait.validate()?;
    let scale = gait.amplitude_command / REFERENCE_AMPLITUDE_DEG * robot.envelope_gain(fin);
    base.scaled(scale)?.with_period(1.0 / gait.frequency)
}

/// Instantaneous servo draw `(caudal W, dorsal W)` between fin transitions.
///
/// The caudal channel follows `idle + cubic * f^3 * (amplitude/20)^2`; the
/// dorsal channel idles at `standby`. The transition-energy pulse is layered
/// on by the simulator, which knows the schedule; between switches the
/// dorsal draw is constant.
pub fn input_power(p: &RobotParams, gait: &Gait, _fin: FinState, _t: f64) -> (f64, f64) {
    let rel_amp = gait.amplitude_command / REFERENCE_AMPLITUDE_DEG;
    let f = gait.frequency;
    let caudal = p.power.idle + p.power.cubic * f * f * f * rel_amp * rel_amp;
    (caudal, p.power.standby)
}

/// Quadratic force balance reduced to `du/dt = (c1 - c2 u^2) / m_eff`.
#[derive(Clone, Copy)]
struct AxialCoeffs {
    c1: f64,
    c2: f64,
}

fn axial_coeffs(
    robot: &RobotParams,
    base: &MidlineParams,
    gait: &Gait,
    fin: FinState,
) -> Result<AxialCoeffs> {
    let mp = effective_midline(base, robot, gait, fin)?;
    let c1 = hydro::mean_thrust(robot, &mp, 0.0);
    let thrust_decay = c1 - hydro::mean_thrust(robot, &mp, 1.0);
    let drag = hydro::drag_force(robot, fin, 1.0);
    Ok(AxialCoeffs {
        c1,
        c2: thrust_decay + drag,
    })
}

fn check_step_args(duration: f64, dt: f64) -> Result<usize> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::Argument(format!(
            "duration must be positive, got {duration}"
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Argument(format!(
            "time step must be positive, got {dt}"
        )));
    }
    if dt > MAX_DT {
        return Err(Error::Argument(format!(
            "time step {dt} s exceeds the accuracy guard of {MAX_DT} s"
        )));
    }
    let n = (duration / dt).round() as usize;
    if n < 1 {
        return Err(Error::Argument(format!(
            "duration {duration} s is shorter than one step of {dt} s"
        )));
    }
    Ok(n)
}

/// Extra dorsal draw at time `t` from transition pulses, W.
fn transition_power(sched: &FinSchedule, p: &RobotParams, t: f64) -> f64 {
    if p.power.fold_energy == 0.0 {
        return 0.0;
    }
    let mut extra = 0.0;
    for ts in sched.switch_times() {
        if t >= ts && t < ts + FIN_TRANSITION_DURATION {
            extra += p.power.fold_energy / FIN_TRANSITION_DURATION;
        }
    }
    extra
}

/// Integrate straight-line self-propulsion from rest.
///
/// Longitudinal dynamics: `(m * added_mass_factor) * du/dt = mean_thrust(u)
/// - drag(fin(t), u)` with the fin state taken from the schedule, and
/// `dx/dt = u`. Starts at `x = 0`, `u = 0`.
pub fn simulate_straight(
    robot: &RobotParams,
    base: &MidlineParams,
    gait: &Gait,
    sched: &FinSchedule,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    robot.validate()?;
    gait.validate()?;
    let n = check_step_args(duration, dt)?;

    let erected = axial_coeffs(robot, base, gait, FinState::Erected)?;
    let folded = axial_coeffs(robot, base, gait, FinState::Folded)?;
    let m_eff = robot.mass * robot.added_mass_factor;

    let mut samples = Vec::with_capacity(n + 1);
    let mut x = 0.0;
    let mut u = 0.0;
    for i in 0..=n {
        let t = i as f64 * dt;
        let fin = sched.fin_state_at(t)?;
        let (p_caudal, p_dorsal) = input_power(robot, gait, fin, t);
        samples.push(Sample {
            t,
            x,
            y: 0.0,
            heading: 0.0,
            speed: u,
            fin,
            p_caudal,
            p_dorsal: p_dorsal + transition_power(sched, robot, t),
        });
        if i == n {
            break;
        }

        let c = match fin {
            FinState::Erected => erected,
            FinState::Folded => folded,
        };
        let accel = |u: f64| (c.c1 - c.c2 * u * u) / m_eff;

        let k1u = accel(u);
        let k1x = u;
        let u2 = u + 0.5 * dt * k1u;
        let k2u = accel(u2);
        let k2x = u2;
        let u3 = u + 0.5 * dt * k2u;
        let k3u = accel(u3);
        let k3x = u3;
        let u4 = u + dt * k3u;
        let k4u = accel(u4);
        let k4x = u4;
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        if !(x.is_finite() && u.is_finite()) {
            return Err(Error::NumericalDivergence { t });
        }
    }
    Trajectory::new(dt, samples)
}

/// Floor on the forward speed in the sideslip proxy, m/s. Avoids the
/// singularity of the incidence angle at rest.
const SIDESLIP_SPEED_FLOOR: f64 = 0.01;

/// Integrate a constant-bias turn from rest in a fixed fin state.
///
/// Planar state `(x, y, heading, u, omega)`: forward dynamics as in
/// [`simulate_straight`], yaw dynamics `Iz * domega/dt = M_tail + M_fin -
/// Nr(fin) * omega` with `M_tail = turn_gain * bias_rad * q(fin, u) *
/// tail_moment_arm` (where `q` is the dynamic pressure times wetted area)
/// and, when erected, the median-fin lateral force at the sideslip proxy
/// `alpha = atan(omega * fin_moment_arm / max(u, 0.01))` acting at
/// `fin_moment_arm`. Position advances along the heading.
pub fn simulate_turn(
    robot: &RobotParams,
    base: &MidlineParams,
    gait: &Gait,
    fin: FinState,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    robot.validate()?;
    gait.validate()?;
    if gait.turn_bias == 0.0 {
        return Err(Error::Argument(
            "turn simulation needs a nonzero turn bias".into(),
        ));
    }
    let n = check_step_args(duration, dt)?;

    let c = axial_coeffs(robot, base, gait, fin)?;
    let m_eff = robot.mass * robot.added_mass_factor;
    let bias_rad = gait.turn_bias.to_radians();
    let tail_moment_per_u2 = robot.turn_gain
        * bias_rad
        * 0.5
        * robot.water_density
        * robot.wetted_area(fin)
        * robot.tail_moment_arm;
    let nr = robot.yaw_damping(fin);
    let iz = robot.yaw_inertia;
    let l_fin = robot.fin_moment_arm;

    // State derivative; `alpha` from atan stays inside (-pi/2, pi/2), so the
    // stall guard in fin_lateral_force cannot trip here.
    let deriv = |state: &[f64; 5]| -> Result<[f64; 5]> {
        let [_, _, heading, u, omega] = *state;
        let du = (c.c1 - c.c2 * u * u) / m_eff;
        let alpha = (omega * l_fin / u.max(SIDESLIP_SPEED_FLOOR)).atan();
        let m_fin = hydro::fin_lateral_force(robot, fin, u, alpha)? * l_fin;
        let domega = (tail_moment_per_u2 * u * u + m_fin - nr * omega) / iz;
        Ok([u * heading.cos(), u * heading.sin(), omega, du, domega])
    };

    let (p_caudal, p_dorsal) = input_power(robot, gait, fin, 0.0);
    let mut samples = Vec::with_capacity(n + 1);
    let mut state = [0.0_f64; 5];
    for i in 0..=n {
        let t = i as f64 * dt;
        samples.push(Sample {
            t,
            x: state[0],
            y: state[1],
            heading: state[2],
            speed: state[3],
            fin,
            p_caudal,
            p_dorsal,
        });
        if i == n {
            break;
        }

        let k1 = deriv(&state)?;
        let s2 = add_scaled(&state, &k1, 0.5 * dt);
        let k2 = deriv(&s2)?;
        let s3 = add_scaled(&state, &k2, 0.5 * dt);
        let k3 = deriv(&s3)?;
        let s4 = add_scaled(&state, &k3, dt);
        let k4 = deriv(&s4)?;
        for j in 0..5 {
            state[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            if !state[j].is_finite() {
                return Err(Error::NumericalDivergence { t });
            }
        }
    }
    Trajectory::new(dt, samples)
}

fn add_scaled(a: &[f64; 5], b: &[f64; 5], s: f64) -> [f64; 5] {
    let mut out = *a;
    for j in 0..5 {
        out[j] += s * b[j];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{FreeParameters, PlantConstants};
    use approx::assert_relative_eq;

    fn model() -> (RobotParams, MidlineParams) {
        let plant = PlantConstants::default();
        let fp = FreeParameters::default();
        (fp.robot_params(&plant), fp.base_midline(&plant))
    }

    fn cruise(f: f64) -> Gait {
        Gait {
            frequency: f,
            amplitude_command: 20.0,
            turn_bias: 0.0,
        }
    }

    #[test]
    fn schedule_lookup() {
        let s = FinSchedule::new(vec![(0.0, FinState::Erected), (2.0, FinState::Folded)]).unwrap();
        assert_eq!(s.fin_state_at(0.0).unwrap(), FinState::Erected);
        assert_eq!(s.fin_state_at(1.999).unwrap(), FinState::Erected);
        assert_eq!(s.fin_state_at(2.0).unwrap(), FinState::Folded);
        assert_eq!(s.fin_state_at(10.0).unwrap(), FinState::Folded);
        assert!(s.fin_state_at(-0.1).is_err());

        let c = FinSchedule::constant(FinState::Folded);
        assert_eq!(c.fin_state_at(10.0).unwrap(), FinState::Folded);
    }

    #[test]
    fn schedule_rejects_bad_shapes() {
        assert!(FinSchedule::new(vec![]).is_err());
        assert!(FinSchedule::new(vec![(0.5, FinState::Folded)]).is_err());
        assert!(FinSchedule::new(vec![
            (0.0, FinState::Erected),
            (2.0, FinState::Folded),
            (2.0, FinState::Erected),
        ])
        .is_err());
    }

    #[test]
    fn zero_envelope_stays_at_rest() {
        let (robot, base) = model();
        let gait = Gait {
            frequency: 2.0,
            amplitude_command: 0.0,
            turn_bias: 0.0,
        };
        let traj = simulate_straight(
            &robot,
            &base,
            &gait,
            &FinSchedule::constant(FinState::Folded),
            5.0,
            0.002,
        )
        .unwrap();
        for s in traj.samples() {
            assert_eq!(s.x, 0.0);
            assert_eq!(s.speed, 0.0);
        }
    }

    #[test]
    fn speed_rises_monotonically_from_rest() {
        let (robot, base) = model();
        let traj = simulate_straight(
            &robot,
            &base,
            &cruise(2.6),
            &FinSchedule::constant(FinState::Folded),
            20.0,
            0.002,
        )
        .unwrap();
        for pair in traj.samples().windows(2) {
            assert!(pair[1].speed >= pair[0].speed);
        }
        // Displacement from rest is convex while speed is non-decreasing.
        let xs: Vec<f64> = traj.samples().iter().map(|s| s.x).collect();
        for w in xs.windows(3) {
            assert!(w[2] - w[1] >= w[1] - w[0] - 1e-12);
        }
    }

    #[test]
    fn converges_to_force_balance_speed() {
        let (robot, base) = model();
        for fin in [FinState::Folded, FinState::Erected] {
            let gait = cruise(2.6);
            let traj = simulate_straight(
                &robot,
                &base,
                &gait,
                &FinSchedule::constant(fin),
                30.0,
                0.002,
            )
            .unwrap();
            let mp = effective_midline(&base, &robot, &gait, fin).unwrap();
            let u_star = hydro::steady_speed(&robot, &mp, fin);
            let terminal = traj.samples().last().unwrap().speed;
            assert_relative_eq!(terminal, u_star, max_relative = 5e-3);
        }
    }

    #[test]
    fn dt_guard_rejects_coarse_steps() {
        let (robot, base) = model();
        let r = simulate_straight(
            &robot,
            &base,
            &cruise(2.0),
            &FinSchedule::constant(FinState::Folded),
            5.0,
            0.02,
        );
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn fold_transition_draws_extra_dorsal_power() {
        let (robot, base) = model();
        let sched =
            FinSchedule::new(vec![(0.0, FinState::Erected), (4.0, FinState::Folded)]).unwrap();
        let traj = simulate_straight(&robot, &base, &cruise(2.6), &sched, 8.0, 0.002).unwrap();
        let at = |t: f64| {
            traj.samples()
                .iter()
                .find(|s| (s.t - t).abs() < 1e-9)
                .unwrap()
        };
        let base_dorsal = robot.power.standby;
        assert_eq!(at(3.0).p_dorsal, base_dorsal);
        let pulse = robot.power.fold_energy / FIN_TRANSITION_DURATION;
        assert_relative_eq!(at(4.0).p_dorsal, base_dorsal + pulse);
        assert_relative_eq!(at(4.498).p_dorsal, base_dorsal + pulse);
        assert_eq!(at(4.5).p_dorsal, base_dorsal);
        // The pulse integrates back to the transition energy.
        let dorsal_energy: f64 = traj
            .samples()
            .iter()
            .map(|s| (s.p_dorsal - base_dorsal) * traj.dt())
            .sum();
        assert_relative_eq!(dorsal_energy, robot.power.fold_energy, max_relative = 2e-2);
    }

    #[test]
    fn caudal_power_follows_cube_of_frequency() {
        let (robot, _) = model();
        let g1 = cruise(1.0);
        let g2 = cruise(2.0);
        let (p1, _) = input_power(&robot, &g1, FinState::Folded, 0.0);
        let (p2, _) = input_power(&robot, &g2, FinState::Folded, 0.0);
        assert_relative_eq!(
            p2 - robot.power.idle,
            8.0 * (p1 - robot.power.idle),
            max_relative = 1e-12
        );
        let g0 = Gait {
            frequency: 1e-9,
            amplitude_command: 20.0,
            turn_bias: 0.0,
        };
        let (p0, _) = input_power(&robot, &g0, FinState::Folded, 0.0);
        assert_relative_eq!(p0, robot.power.idle, max_relative = 1e-6);
    }

    #[test]
    fn turn_bias_sign_mirrors_the_path() {
        let (robot, base) = model();
        let mut gait = cruise(2.0);
        gait.turn_bias = 30.0;
        let left = simulate_turn(&robot, &base, &gait, FinState::Erected, 10.0, 0.002).unwrap();
        gait.turn_bias = -30.0;
        let right = simulate_turn(&robot, &base, &gait, FinState::Erected, 10.0, 0.002).unwrap();
        for (a, b) in left.samples().iter().zip(right.samples()) {
            assert_relative_eq!(a.x, b.x, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(a.y, -b.y, max_relative = 1e-12, epsilon = 1e-12);
            assert_relative_eq!(a.heading, -b.heading, max_relative = 1e-12, epsilon = 1e-12);
        }
    }

    #[test]
    fn steady_turn_satisfies_radius_identity() {
        // At convergence the yaw rate and speed settle, so R = U / omega.
        let (robot, base) = model();
        let mut gait = cruise(2.6);
        gait.turn_bias = 30.0;
        let traj = simulate_turn(&robot, &base, &gait, FinState::Erected, 40.0, 0.002).unwrap();
        let tail = traj.slice_from(30.0).unwrap();
        let n = tail.len();
        let s0 = tail.samples()[0];
        let s1 = tail.samples()[n - 1];
        let omega = (s1.heading - s0.heading) / (s1.t - s0.t);
        let u = tail.mean_speed();
        let r_kinematic = u / omega;
        // Circle radius from chord geometry of the settled arc.
        let chord = ((s1.x - s0.x).powi(2) + (s1.y - s0.y).powi(2)).sqrt();
        let r_chord = chord / (2.0 * ((s1.heading - s0.heading) / 2.0).sin()).abs();
        assert_relative_eq!(r_kinematic, r_chord, max_relative = 1e-2);
    }

    #[test]
    fn turn_requires_bias() {
        let (robot, base) = model();
        let r = simulate_turn(&robot, &base, &cruise(2.0), FinState::Folded, 5.0, 0.002);
        assert!(matches!(r, Err(Error::Argument(_))));
    }

    #[test]
    fn trajectory_shape_checks() {
        let mk = |t, speed| Sample {
            t,
            x: 0.0,
            y: 0.0,
            heading: 0.0,
            speed,
            fin: FinState::Folded,
            p_caudal: 0.0,
            p_dorsal: 0.0,
        };
        assert!(Trajectory::new(0.1, vec![mk(0.0, 1.0)]).is_err());
        assert!(Trajectory::new(0.1, vec![mk(0.0, 1.0), mk(0.25, 1.0)]).is_err());
        assert!(Trajectory::new(0.1, vec![mk(0.0, 1.0), mk(0.1, -0.5)]).is_err());
        assert!(Trajectory::new(0.1, vec![mk(0.0, 1.0), mk(0.1, 0.5)]).is_ok());
    }

    #[test]
    fn gait_bounds() {
        assert!(cruise(2.0).validate().is_ok());
        assert!(Gait {
            frequency: 0.0,
            amplitude_command: 20.0,
            turn_bias: 0.0
        }
        .validate()
        .is_err());
        assert!(Gait {
            frequency: 2.0,
            amplitude_command: 46.0,
            turn_bias: 0.0
        }
        .validate()
        .is_err());
        assert!(Gait {
            frequency: 2.0,
            amplitude_command: 20.0,
            turn_bias: -50.0
        }
        .validate()
        .is_err());
    }
}
