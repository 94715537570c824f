//! Reduced-order force models.
//!
//! Mean thrust follows the slender-body result for a traveling-wave swimmer:
//! the cycle-averaged thrust depends only on the tail-section kinematics and
//! the added mass per unit length there. Resistance is a single lumped
//! quadratic drag over the wetted area of the current fin state, and the
//! erected median fin contributes a linear lateral lift.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::MidlineParams;

/// Median-fin configuration. Exactly one of the two states holds at any time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinState {
    Erected,
    Folded,
}

impl FinState {
    pub fn label(self) -> &'static str {
        match self {
            FinState::Erected => "erected",
            FinState::Folded => "folded",
        }
    }
}

impl std::fmt::Display for FinState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for FinState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "erected" => Ok(FinState::Erected),
            "folded" => Ok(FinState::Folded),
            other => Err(Error::Parse(format!(
                "unknown fin state '{other}' (expected 'erected' or 'folded')"
            ))),
        }
    }
}

/// Electrical power model for the two servo channels.
///
/// The caudal servo draws `idle + cubic * f^3 * (amplitude/20 deg)^2` watts;
/// the dorsal servo draws `standby` watts and spends `fold_energy` joules per
/// erect/fold transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerModel {
    /// Caudal servo idle draw, W.
    pub idle: f64,
    /// Frequency-cubed coefficient of the caudal draw, W/Hz^3.
    pub cubic: f64,
    /// Dorsal servo standby draw, W.
    pub standby: f64,
    /// Energy spent per fin transition, J.
    pub fold_energy: f64,
}

/// Physical plant: measured quantities plus calibrated lumped coefficients.
///
/// SI units throughout. Invariants checked by [`RobotParams::validate`]: all
/// quantities positive and finite, `wetted_area_erected >
/// wetted_area_folded` (erecting the fin strictly increases wetted area),
/// and `erected_envelope_gain >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    /// Body mass, kg.
    pub mass: f64,
    /// Longitudinal added-mass multiplier on the body mass, dimensionless.
    pub added_mass_factor: f64,
    /// Nose-to-tail-tip length, m.
    pub body_length: f64,
    /// Tail-section span used for the added mass per unit length, m.
    pub tail_span: f64,
    /// Water density, kg/m^3.
    pub water_density: f64,
    /// Lumped quadratic drag coefficient, dimensionless.
    pub drag_coefficient: f64,
    /// Wetted area with the median fins folded, m^2.
    pub wetted_area_folded: f64,
    /// Wetted area with the median fins erected, m^2.
    pub wetted_area_erected: f64,
    /// Planform area of one median fin, m^2.
    pub fin_area: f64,
    /// Fin lift-curve slope, 1/rad.
    pub fin_lift_slope: f64,
    /// Yaw moment of inertia, kg*m^2.
    pub yaw_inertia: f64,
    /// Linear yaw damping with fins folded, N*m*s.
    pub yaw_damping_folded: f64,
    /// Linear yaw damping with fins erected, N*m*s.
    pub yaw_damping_erected: f64,
    /// Lever arm of the median-fin lateral force about the yaw axis, m.
    pub fin_moment_arm: f64,
    /// Lever arm of the tail-generated turning moment, m.
    pub tail_moment_arm: f64,
    /// Gain mapping tail-beat bias (rad) to turning-moment fraction,
    /// dimensionless.
    pub turn_gain: f64,
    /// Envelope multiplier applied when the median fins are erected; the
    /// erected body holds a tighter, more convergent midline that beats with
    /// slightly larger effective tail amplitude. Dimensionless, >= 1.
    pub erected_envelope_gain: f64,
    /// Servo power model.
    pub power: PowerModel,
}

impl RobotParams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("mass", self.mass),
            ("added_mass_factor", self.added_mass_factor),
            ("body_length", self.body_length),
            ("tail_span", self.tail_span),
            ("water_density", self.water_density),
            ("drag_coefficient", self.drag_coefficient),
            ("wetted_area_folded", self.wetted_area_folded),
            ("wetted_area_erected", self.wetted_area_erected),
            ("fin_area", self.fin_area),
            ("fin_lift_slope", self.fin_lift_slope),
            ("yaw_inertia", self.yaw_inertia),
            ("yaw_damping_folded", self.yaw_damping_folded),
            ("yaw_damping_erected", self.yaw_damping_erected),
            ("fin_moment_arm", self.fin_moment_arm),
            ("tail_moment_arm", self.tail_moment_arm),
            ("turn_gain", self.turn_gain),
            ("erected_envelope_gain", self.erected_envelope_gain),
            ("power.idle", self.power.idle),
            ("power.cubic", self.power.cubic),
            ("power.standby", self.power.standby),
        ];
        for (name, v) in positives {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if !(self.power.fold_energy.is_finite() && self.power.fold_energy >= 0.0) {
            return Err(Error::Domain(format!(
                "power.fold_energy must be non-negative, got {}",
                self.power.fold_energy
            )));
        }
        if self.wetted_area_erected <= self.wetted_area_folded {
            return Err(Error::Domain(format!(
                "wetted_area_erected ({}) must exceed wetted_area_folded ({})",
                self.wetted_area_erected, self.wetted_area_folded
            )));
        }
        if self.erected_envelope_gain < 1.0 {
            return Err(Error::Domain(format!(
                "erected_envelope_gain must be at least 1, got {}",
                self.erected_envelope_gain
            )));
        }
        Ok(())
    }

    /// Wetted area for the given fin state, m^2.
    pub fn wetted_area(&self, fin: FinState) -> f64 {
        match fin {
            FinState::Erected => self.wetted_area_erected,
            FinState::Folded => self.wetted_area_folded,
        }
    }

    /// Yaw damping for the given fin state, N*m*s.
    pub fn yaw_damping(&self, fin: FinState) -> f64 {
        match fin {
            FinState::Erected => self.yaw_damping_erected,
            FinState::Folded => self.yaw_damping_folded,
        }
    }

    /// Envelope multiplier for the given fin state, dimensionless.
    pub fn envelope_gain(&self, fin: FinState) -> f64 {
        match fin {
            FinState::Erected => self.erected_envelope_gain,
            FinState::Folded => 1.0,
        }
    }

    /// Added mass per unit length at the tail section,
    /// `rho * pi * span^2 / 4`, kg/m.
    pub fn added_mass_per_length(&self) -> f64 {
        self.water_density * PI * self.tail_span * self.tail_span / 4.0
    }
}

/// Cycle-mean thrust of the traveling-wave tail at forward speed `u`, N.
///
/// `T = (ma/2) * [ <ht^2> - u^2 * <hx^2> ]` evaluated at the tail tip, with
/// `ma` the added mass per unit length, `<ht^2> = A(L)^2 w^2 / 2` and
/// `<hx^2> = (A'(L)^2 + A(L)^2 k^2) / 2` the cycle means of the squared time
/// and space derivatives of the midline wave (`w = 2*pi/period`,
/// `k = 2*pi/wavelength`).
///
/// Strictly decreasing in `u` for a nonzero envelope; intra-cycle thrust
/// oscillation is deliberately averaged away so the longitudinal dynamics
/// stay smooth.
pub fn mean_thrust(p: &RobotParams, mp: &MidlineParams, u: f64) -> f64 {
    let l = mp.body_length;
    let a = mp.a0 + mp.a1 * l + mp.a2 * l * l;
    let a_slope = mp.a1 + 2.0 * mp.a2 * l;
    let omega = std::f64::consts::TAU / mp.period;
    let k = std::f64::consts::TAU / mp.wavelength;
    let ht2 = a * a * omega * omega / 2.0;
    let hx2 = (a_slope * a_slope + a * a * k * k) / 2.0;
    0.5 * p.added_mass_per_length() * (ht2 - u * u * hx2)
}

/// Quadratic body drag at forward speed `u` for the given fin state, N.
pub fn drag_force(p: &RobotParams, fin: FinState, u: f64) -> f64 {
    0.5 * p.water_density * p.drag_coefficient * p.wetted_area(fin) * u * u
}

/// Lateral lift of the median fin at incidence `alpha` (rad), N.
///
/// Zero when folded. The linear lift law holds only below stall, so
/// `|alpha| >= pi/2` is rejected as outside the model's domain.
pub fn fin_lateral_force(p: &RobotParams, fin: FinState, u: f64, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() || alpha.abs() >= PI / 2.0 {
        return Err(Error::Domain(format!(
            "fin incidence {alpha} rad is at or beyond stall (|alpha| < pi/2)"
        )));
    }
    Ok(match fin {
        FinState::Folded => 0.0,
        FinState::Erected => {
            0.5 * p.water_density * p.fin_lift_slope * alpha * p.fin_area * u * u
        }
    })
}

/// Self-propelled balance speed where mean thrust equals drag, m/s.
///
/// Closed form of the unique positive root: both thrust and drag are
/// quadratic in `u`, so `u*^2 = c1 / c2` with `c1` the static thrust and
/// `c2` the combined (thrust decay + drag) quadratic coefficient. Returns 0
/// for a zero envelope.
pub fn steady_speed(p: &RobotParams, mp: &MidlineParams, fin: FinState) -> f64 {
    let c1 = mean_thrust(p, mp, 0.0);
    // Quadratic coefficients recovered from two evaluations keep this root
    // tied to the exact force laws above.
    let thrust_decay = c1 - mean_thrust(p, mp, 1.0);
    let drag_coeff = drag_force(p, fin, 1.0);
    let c2 = thrust_decay + drag_coeff;
    if c1 <= 0.0 || c2 <= 0.0 {
        return 0.0;
    }
    (c1 / c2).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(crate) fn test_robot() -> RobotParams {
        RobotParams {
            mass: 2.305,
            added_mass_factor: 1.7,
            body_length: 0.57,
            tail_span: 0.085,
            water_density: 1000.0,
            drag_coefficient: 0.22,
            wetted_area_folded: 0.035,
            wetted_area_erected: 0.051,
            fin_area: 0.01,
            fin_lift_slope: 5.0,
            yaw_inertia: 0.1,
            yaw_damping_folded: 0.96,
            yaw_damping_erected: 0.93,
            fin_moment_arm: 0.1,
            tail_moment_arm: 0.263,
            turn_gain: 1.3,
            erected_envelope_gain: 1.1,
            power: PowerModel {
                idle: 0.8,
                cubic: 0.015,
                standby: 0.25,
                fold_energy: 0.5,
            },
        }
    }

    fn wave() -> MidlineParams {
        MidlineParams::new(0.0, 0.0, 0.106, 1.25, 1.0 / 2.6, 0.57).unwrap()
    }

    #[test]
    fn zero_envelope_gives_zero_thrust() {
        let p = test_robot();
        let mp = MidlineParams::new(0.0, 0.0, 0.0, 1.25, 0.5, 0.57).unwrap();
        for u in [0.0, 0.3, 1.0] {
            assert_eq!(mean_thrust(&p, &mp, u), 0.0);
        }
    }

    #[test]
    fn static_thrust_value() {
        let p = test_robot();
        let mp = wave();
        let a = 0.106 * 0.57 * 0.57;
        let omega = std::f64::consts::TAU * 2.6;
        let expect = p.added_mass_per_length() / 4.0 * a * a * omega * omega;
        assert_relative_eq!(mean_thrust(&p, &mp, 0.0), expect, max_relative = 1e-12);
        assert!(expect > 0.0);
    }

    #[test]
    fn thrust_zero_crossing_at_wave_speed_for_flat_slope() {
        // With A'(L) = 0 the thrust root sits exactly at the wave speed.
        let p = test_robot();
        let mp = MidlineParams::new(0.03, 0.0, 0.0, 1.1, 0.5, 0.57).unwrap();
        let c = mp.wave_speed();
        assert_relative_eq!(mean_thrust(&p, &mp, c), 0.0, epsilon = 1e-10);
        assert!(mean_thrust(&p, &mp, 0.9 * c) > 0.0);
        assert!(mean_thrust(&p, &mp, 1.1 * c) < 0.0);
    }

    #[test]
    fn thrust_decreases_with_speed() {
        let p = test_robot();
        let mp = wave();
        let mut prev = f64::INFINITY;
        for i in 0..20 {
            let t = mean_thrust(&p, &mp, 0.1 * i as f64);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn drag_examples() {
        let mut p = test_robot();
        p.drag_coefficient = 0.1;
        p.wetted_area_folded = 0.05;
        p.wetted_area_erected = 0.06;
        assert_eq!(drag_force(&p, FinState::Folded, 0.0), 0.0);
        assert_relative_eq!(
            drag_force(&p, FinState::Folded, 0.338),
            0.5 * 1000.0 * 0.1 * 0.05 * 0.338 * 0.338,
            max_relative = 1e-12
        );
        assert!(drag_force(&p, FinState::Erected, 0.3) > drag_force(&p, FinState::Folded, 0.3));
    }

    #[test]
    fn drag_is_quadratic() {
        let p = test_robot();
        for u in [0.05, 0.2, 0.7] {
            assert_relative_eq!(
                drag_force(&p, FinState::Erected, 2.0 * u),
                4.0 * drag_force(&p, FinState::Erected, u),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn fin_lift_examples() {
        let mut p = test_robot();
        p.fin_lift_slope = std::f64::consts::TAU;
        assert_eq!(
            fin_lateral_force(&p, FinState::Folded, 0.9, 0.4).unwrap(),
            0.0
        );
        assert_eq!(
            fin_lateral_force(&p, FinState::Erected, 0.9, 0.0).unwrap(),
            0.0
        );
        assert_relative_eq!(
            fin_lateral_force(&p, FinState::Erected, 0.3, 0.1).unwrap(),
            0.5 * 1000.0 * std::f64::consts::TAU * 0.1 * 0.01 * 0.09,
            max_relative = 1e-12
        );
    }

    #[test]
    fn fin_lift_is_odd_in_alpha() {
        let p = test_robot();
        for alpha in [0.05, 0.3, 1.2] {
            let plus = fin_lateral_force(&p, FinState::Erected, 0.4, alpha).unwrap();
            let minus = fin_lateral_force(&p, FinState::Erected, 0.4, -alpha).unwrap();
            assert_eq!(plus, -minus);
        }
    }

    #[test]
    fn fin_lift_rejects_stall() {
        let p = test_robot();
        assert!(fin_lateral_force(&p, FinState::Erected, 0.4, PI / 2.0).is_err());
        assert!(fin_lateral_force(&p, FinState::Erected, 0.4, -2.0).is_err());
    }

    #[test]
    fn balance_speed_is_the_force_crossing() {
        let p = test_robot();
        let mp = wave();
        for fin in [FinState::Folded, FinState::Erected] {
            let u = steady_speed(&p, &mp, fin);
            assert!(u > 0.0);
            assert_relative_eq!(
                mean_thrust(&p, &mp, u),
                drag_force(&p, fin, u),
                max_relative = 1e-10
            );
            assert!(u < mp.wave_speed());
        }
    }

    #[test]
    fn erected_balance_speed_is_lower() {
        let p = test_robot();
        let mp = wave();
        assert!(steady_speed(&p, &mp, FinState::Erected) < steady_speed(&p, &mp, FinState::Folded));
    }

    #[test]
    fn swapped_wetted_areas_fail_validation() {
        let mut p = test_robot();
        std::mem::swap(&mut p.wetted_area_folded, &mut p.wetted_area_erected);
        assert!(matches!(p.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn fin_state_round_trips_through_text() {
        for fin in [FinState::Erected, FinState::Folded] {
            let s = fin.to_string();
            assert_eq!(s.parse::<FinState>().unwrap(), fin);
        }
        assert!("sideways".parse::<FinState>().is_err());
    }
}
