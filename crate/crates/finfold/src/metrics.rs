//! Dimensionless and per-distance performance measures: cost of transport,
//! Strouhal number, and Reynolds number.

use serde::Serialize;

use crate::analysis::TurnFit;
use crate::error::{Error, Result};

/// Standard gravity, m/s^2.
pub const GRAVITY: f64 = 9.81;

/// Kinematic viscosity of water near 20 C, m^2/s.
pub const KINEMATIC_VISCOSITY_WATER: f64 = 1e-6;

/// Strouhal band in which undulatory propulsion is most efficient.
pub const STROUHAL_OPTIMAL: (f64, f64) = (0.25, 0.35);

/// Dimensionless cost of transport `P / (m g U)`.
///
/// `mean_power` W, `mass` kg, `mean_speed` m/s. Mass and speed must be
/// positive.
pub fn cost_of_transport(mean_power: f64, mass: f64, mean_speed: f64) -> Result<f64> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::Domain(format!("mass must be positive, got {mass}")));
    }
    if !(mean_speed.is_finite() && mean_speed > 0.0) {
        return Err(Error::Domain(format!(
            "mean speed must be positive for cost of transport, got {mean_speed}"
        )));
    }
    Ok(mean_power / (mass * GRAVITY * mean_speed))
}

/// Cost of transport split by servo channel `(caudal, dorsal)`; the two
/// components sum to the total for `p_caudal + p_dorsal`.
pub fn cot_split(
    p_caudal: f64,
    p_dorsal: f64,
    mass: f64,
    mean_speed: f64,
) -> Result<(f64, f64)> {
    Ok((
        cost_of_transport(p_caudal, mass, mean_speed)?,
        cost_of_transport(p_dorsal, mass, mean_speed)?,
    ))
}

/// Strouhal number with its efficiency-band flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Strouhal {
    /// `f * A_pp / U`, dimensionless.
    pub value: f64,
    /// Whether the value falls in [0.25, 0.35], inclusive.
    pub in_optimal_range: bool,
}

/// Strouhal number `f * A_pp / U` from the beat frequency (Hz), the tail
/// peak-to-peak excursion (m), and the cruise speed (m/s).
pub fn strouhal(frequency: f64, peak_to_peak: f64, speed: f64) -> Result<Strouhal> {
    if !(frequency.is_finite() && frequency > 0.0) {
        return Err(Error::Domain(format!(
            "frequency must be positive, got {frequency}"
        )));
    }
    if !(peak_to_peak.is_finite() && peak_to_peak >= 0.0) {
        return Err(Error::Domain(format!(
            "peak-to-peak amplitude must be non-negative, got {peak_to_peak}"
        )));
    }
    if !(speed.is_finite() && speed > 0.0) {
        return Err(Error::Domain(format!(
            "speed must be positive for a Strouhal number, got {speed}"
        )));
    }
    let value = frequency * peak_to_peak / speed;
    Ok(Strouhal {
        value,
        in_optimal_range: (STROUHAL_OPTIMAL.0..=STROUHAL_OPTIMAL.1).contains(&value),
    })
}

/// Reynolds number `U L / nu` from speed (m/s), reference length (m), and
/// kinematic viscosity (m^2/s).
pub fn reynolds(speed: f64, length: f64, viscosity: f64) -> f64 {
    speed * length / viscosity
}

/// Performance summary of one straight run, with the paired turn fit when a
/// turning trial accompanied it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SwimMetrics {
    /// Net mean speed over the whole run, m/s.
    pub mean_speed: f64,
    /// Mean total electrical power over the whole run, W.
    pub mean_power: f64,
    /// Whole-run cost of transport.
    pub cot_total: f64,
    /// Caudal-channel share of the cost of transport.
    pub cot_caudal: f64,
    /// Dorsal-channel share of the cost of transport.
    pub cot_dorsal: f64,
    /// Strouhal number at cruise.
    pub strouhal: f64,
    /// Whether the Strouhal number falls in the efficiency band.
    pub st_in_optimal_range: bool,
    /// Reynolds number at cruise.
    pub reynolds: f64,
    /// Burst acceleration, m/s^2.
    pub accel: f64,
    /// Coefficient of determination of the burst fit.
    pub accel_r_squared: f64,
    /// Turning fit from the paired biased run, when one was made.
    pub turn: Option<TurnFit>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn transport_cost_reference_value() {
        let cot = cost_of_transport(2.0, 2.305, 0.338).unwrap();
        assert!((cot - 0.2617).abs() <= 1e-4);
    }

    #[test]
    fn split_components_sum_to_the_total() {
        let (caudal, dorsal) = cot_split(1.69, 0.282, 2.305, 0.338).unwrap();
        assert!((caudal - 0.2211).abs() <= 1e-4);
        assert!((dorsal - 0.0369).abs() <= 1e-4);
        let total = cost_of_transport(1.69 + 0.282, 2.305, 0.338).unwrap();
        assert_relative_eq!(caudal + dorsal, total, max_relative = 1e-12);
    }

    #[test]
    fn transport_cost_scaling() {
        let base = cost_of_transport(1.0, 2.0, 0.5).unwrap();
        let double_power = cost_of_transport(2.0, 2.0, 0.5).unwrap();
        let double_speed = cost_of_transport(1.0, 2.0, 1.0).unwrap();
        assert_relative_eq!(double_power, 2.0 * base, max_relative = 1e-12);
        assert_relative_eq!(double_speed, 0.5 * base, max_relative = 1e-12);
    }

    #[test]
    fn transport_cost_rejects_bad_denominators() {
        assert!(cost_of_transport(1.0, 0.0, 0.5).is_err());
        assert!(cost_of_transport(1.0, 2.0, 0.0).is_err());
        assert!(cost_of_transport(1.0, -2.0, 0.5).is_err());
    }

    #[test]
    fn strouhal_reference_value() {
        let st = strouhal(2.6, 0.13, 0.338).unwrap();
        assert!((st.value - 1.0).abs() <= 1e-12);
        assert!(!st.in_optimal_range);
    }

    #[test]
    fn strouhal_band_edges_are_inclusive() {
        assert!(strouhal(1.0, 0.25, 1.0).unwrap().in_optimal_range);
        assert!(strouhal(1.0, 0.35, 1.0).unwrap().in_optimal_range);
        assert!(!strouhal(1.0, 0.24999, 1.0).unwrap().in_optimal_range);
        assert!(!strouhal(1.0, 0.35001, 1.0).unwrap().in_optimal_range);
    }

    #[test]
    fn strouhal_is_dimensionally_consistent() {
        // Rescaling length and time together leaves the number unchanged.
        let a = strouhal(2.0, 0.1, 0.4).unwrap().value;
        let b = strouhal(2.0 / 3.0, 0.1 * 5.0, 0.4 * 5.0 / 3.0).unwrap().value;
        assert_relative_eq!(a, b, max_relative = 1e-12);
        assert!(strouhal(0.0, 0.1, 0.4).is_err());
        assert!(strouhal(2.0, 0.1, 0.0).is_err());
    }

    #[test]
    fn reynolds_reference_value() {
        let re = reynolds(0.338, 0.57, KINEMATIC_VISCOSITY_WATER);
        assert!((re - 192_660.0).abs() <= 1.0);
    }

    #[test]
    fn reynolds_is_linear_in_speed_and_length() {
        let base = reynolds(0.2, 0.5, 1e-6);
        assert_relative_eq!(reynolds(0.4, 0.5, 1e-6), 2.0 * base, max_relative = 1e-12);
        assert_relative_eq!(reynolds(0.2, 1.0, 1e-6), 2.0 * base, max_relative = 1e-12);
        assert_relative_eq!(reynolds(0.2, 0.5, 2e-6), 0.5 * base, max_relative = 1e-12);
    }
}
