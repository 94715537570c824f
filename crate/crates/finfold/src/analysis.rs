//! Estimators that reduce a trajectory to scalar performance numbers:
//! acceleration-phase detection, constant-acceleration and steady-speed
//! regressions, circular turning fits, and oscillation amplitude extraction.
//!
//! All estimators are deterministic and closed-form; none iterate to a
//! tolerance, so equal inputs give bitwise-equal outputs.

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Result of the constant-acceleration regression over a burst window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccelFit {
    /// Fitted acceleration, m/s^2.
    pub accel: f64,
    /// Coefficient of determination of the displacement fit about its mean.
    pub r_squared: f64,
    /// Length of the fitted window, s.
    pub window: f64,
}

/// Result of a circular turning fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurnFit {
    /// Turning radius, m.
    pub radius: f64,
    /// Signed yaw rate from the unwrapped heading span, rad/s. Positive is a
    /// counter-clockwise turn.
    pub angular_speed: f64,
    /// Circle center in world coordinates, m.
    pub center: (f64, f64),
    /// Root-mean-square radial distance of the samples from the fitted
    /// circle, m.
    pub residual_rms: f64,
}

/// Summary of one straight-line run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunAnalysis {
    /// End of the acceleration phase, s (absolute trajectory time).
    pub t_accel_end: f64,
    /// Constant-acceleration fit over the burst window.
    pub accel: AccelFit,
    /// Regressed cruise speed over the settled window, m/s.
    pub steady_speed: f64,
}

/// Span of the speed-comparison lookback in the settling detector, s.
const DETECT_LOOKBACK: f64 = 0.5;

/// Span over which the settling condition must hold continuously, s.
const DETECT_HOLD: f64 = 1.0;

/// Relative speed-change threshold of the settling detector.
const DETECT_TOLERANCE: f64 = 0.02;

/// Locate the end of the acceleration phase.
///
/// A sample settles when the speed changed by less than 2% (relative to the
/// current speed) over the preceding 0.5 s; the phase boundary is the
/// earliest sample from which that condition holds for a full 1.0 s.
/// Returns the boundary's absolute trajectory time.
pub fn detect_phases(traj: &Trajectory) -> Result<f64> {
    if traj.duration() < 3.0 {
        return Err(Error::Argument(format!(
            "phase detection needs at least 3 s of data, got {:.3} s",
            traj.duration()
        )));
    }
    let dt = traj.dt();
    let k = (DETECT_LOOKBACK / dt).round() as usize;
    let h = (DETECT_HOLD / dt).round() as usize;
    if k == 0 {
        return Err(Error::Argument(format!(
            "time step {dt} s is too coarse for the {DETECT_LOOKBACK} s lookback"
        )));
    }
    let s = traj.samples();
    let ok = |i: usize| {
        i >= k && (s[i].speed - s[i - k].speed).abs() < DETECT_TOLERANCE * s[i].speed.max(1e-9)
    };
    let mut streak_start: Option<usize> = None;
    for i in k..s.len() {
        if ok(i) {
            let start = *streak_start.get_or_insert(i);
            if i - start >= h {
                return Ok(s[start].t);
            }
        } else {
            streak_start = None;
        }
    }
    Err(Error::NoSteadyPhase)
}

/// Fit displacement to `x - x0 = a/2 (t - t0)^2` by least squares through
/// the rebased origin. The coefficient of determination is computed about
/// the mean displacement, so a poor fit can go negative.
pub fn fit_constant_acceleration(traj: &Trajectory) -> Result<AccelFit> {
    let s = traj.samples();
    if s.len() < 10 {
        return Err(Error::Argument(format!(
            "acceleration fit needs at least 10 samples, got {}",
            s.len()
        )));
    }
    let (t0, x0) = (s[0].t, s[0].x);
    let mut s_xt2 = 0.0;
    let mut s_t4 = 0.0;
    let mut sum_x = 0.0;
    for p in s {
        let tau2 = (p.t - t0) * (p.t - t0);
        let xi = p.x - x0;
        s_xt2 += xi * tau2;
        s_t4 += tau2 * tau2;
        sum_x += xi;
    }
    let mean_x = sum_x / s.len() as f64;
    let mut ss_tot = 0.0;
    for p in s {
        ss_tot += (p.x - x0 - mean_x) * (p.x - x0 - mean_x);
    }
    if ss_tot == 0.0 {
        return Err(Error::DegenerateData(
            "displacement has no variation over the fit window".into(),
        ));
    }
    let accel = 2.0 * s_xt2 / s_t4;
    let mut ss_res = 0.0;
    for p in s {
        let tau = p.t - t0;
        let resid = (p.x - x0) - 0.5 * accel * tau * tau;
        ss_res += resid * resid;
    }
    Ok(AccelFit {
        accel,
        r_squared: 1.0 - ss_res / ss_tot,
        window: s[s.len() - 1].t - t0,
    })
}

/// Cruise speed as the ordinary least-squares slope of displacement against
/// time over the given window, m/s.
pub fn fit_steady_speed(traj: &Trajectory) -> Result<f64> {
    let s = traj.samples();
    if s.len() < 10 {
        return Err(Error::Argument(format!(
            "steady-speed fit needs at least 10 samples, got {}",
            s.len()
        )));
    }
    let n = s.len() as f64;
    let mean_t = s.iter().map(|p| p.t).sum::<f64>() / n;
    let mean_x = s.iter().map(|p| p.x).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for p in s {
        num += (p.t - mean_t) * (p.x - mean_x);
        den += (p.t - mean_t) * (p.t - mean_t);
    }
    if den == 0.0 {
        return Err(Error::DegenerateData(
            "timestamps have no variation over the fit window".into(),
        ));
    }
    Ok(num / den)
}

/// Detect the phase boundary, then regress acceleration over the burst
/// window and cruise speed over the settled window (starting 1 s past the
/// boundary to shed residual transient).
pub fn analyze_run(traj: &Trajectory) -> Result<RunAnalysis> {
    let t_accel_end = detect_phases(traj)?;
    let accel = fit_constant_acceleration(&traj.slice_until(t_accel_end)?)?;
    let steady_speed = fit_steady_speed(&traj.slice_from(t_accel_end + 1.0)?)?;
    Ok(RunAnalysis {
        t_accel_end,
        accel,
        steady_speed,
    })
}

fn wrap_to_pi(angle: f64) -> f64 {
    angle - std::f64::consts::TAU * (angle / std::f64::consts::TAU).round()
}

/// Cumulative heading series with the branch jumps removed.
fn unwrap_headings(traj: &Trajectory) -> Vec<f64> {
    let s = traj.samples();
    let mut out = Vec::with_capacity(s.len());
    let mut prev = s[0].heading;
    out.push(prev);
    for p in &s[1..] {
        prev += wrap_to_pi(p.heading - prev);
        out.push(prev);
    }
    out
}

/// Fit a settled turn: a circle through the planar positions (algebraic
/// least squares on the mean-centered points) plus the yaw rate from the
/// unwrapped heading span.
///
/// Requires at least 20 samples and at least a quarter turn of heading
/// span; nearly collinear positions fail with a degenerate-circle error.
pub fn fit_turning(traj: &Trajectory) -> Result<TurnFit> {
    let s = traj.samples();
    if s.len() < 20 {
        return Err(Error::Argument(format!(
            "turning fit needs at least 20 samples, got {}",
            s.len()
        )));
    }
    let psi = unwrap_headings(traj);
    let span = psi[psi.len() - 1] - psi[0];
    if span.abs() < std::f64::consts::FRAC_PI_2 {
        return Err(Error::Argument(format!(
            "heading span {:.3} rad is below the quarter-turn minimum for a turning fit",
            span
        )));
    }
    let angular_speed = span / traj.duration();

    let n = s.len() as f64;
    let cx = s.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = s.iter().map(|p| p.y).sum::<f64>() / n;

    // Algebraic circle model on centered coordinates (u, v):
    //   2*a*u + 2*b*v + c = u^2 + v^2,
    // whose least-squares normal equations are solved directly; the center
    // offset is (a, b) and radius^2 = a^2 + b^2 + c.
    let mut m = [[0.0_f64; 3]; 3];
    let mut rhs = [0.0_f64; 3];
    for p in s {
        let u = p.x - cx;
        let v = p.y - cy;
        let g = [2.0 * u, 2.0 * v, 1.0];
        let z = u * u + v * v;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += g[i] * g[j];
            }
            rhs[i] += z * g[i];
        }
    }
    let w = solve3(m, rhs).ok_or(Error::CircleDegenerate)?;
    let r2 = w[0] * w[0] + w[1] * w[1] + w[2];
    if !(r2.is_finite() && r2 > 0.0) {
        return Err(Error::CircleDegenerate);
    }
    let radius = r2.sqrt();
    let center = (cx + w[0], cy + w[1]);

    let mut ss = 0.0;
    for p in s {
        let d = ((p.x - center.0).powi(2) + (p.y - center.1).powi(2)).sqrt() - radius;
        ss += d * d;
    }
    Ok(TurnFit {
        radius,
        angular_speed,
        center,
        residual_rms: (ss / n).sqrt(),
    })
}

/// Solve a 3x3 linear system by Gaussian elimination with partial pivoting.
/// Returns `None` when the matrix is singular to working precision.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = m
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
        .max(1e-300);
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[pivot][col].abs() < 1e-12 * scale {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for col in (0..3).rev() {
        let mut v = b[col];
        for k in col + 1..3 {
            v -= m[col][k] * x[k];
        }
        x[col] = v / m[col][col];
    }
    Some(x)
}

/// Mean peak-to-peak excursion of an oscillating series, measured per cycle.
///
/// The series is demeaned and segmented into cycles at upward crossings of
/// a hysteresis band at +/-30% of the RMS value, which keeps small-noise
/// wiggle from splitting cycles. Needs at least three complete cycles.
pub fn oscillation_peak_to_peak(series: &[f64]) -> Result<f64> {
    if series.len() < 8 {
        return Err(Error::NoOscillation(format!(
            "series of {} samples is too short",
            series.len()
        )));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let rms = (series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
    if rms == 0.0 {
        return Err(Error::NoOscillation("series is constant".into()));
    }
    let threshold = 0.3 * rms;

    let mut crossings = Vec::new();
    let mut armed = false;
    for (i, &v) in series.iter().enumerate() {
        let y = v - mean;
        if y < -threshold {
            armed = true;
        } else if armed && y > threshold {
            crossings.push(i);
            armed = false;
        }
    }
    if crossings.len() < 4 {
        return Err(Error::NoOscillation(format!(
            "found {} band crossings, need at least 4 (3 full cycles)",
            crossings.len()
        )));
    }
    let mut total = 0.0;
    for pair in crossings.windows(2) {
        let cycle = &series[pair[0]..pair[1]];
        let hi = cycle.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lo = cycle.iter().fold(f64::INFINITY, |a, &b| a.min(b));
        total += hi - lo;
    }
    Ok(total / (crossings.len() - 1) as f64)
}
