//! Traveling-wave midline model.
//!
//! The body's lateral displacement is `h(x, t) = A(x) * sin(2*pi*x/lambda -
//! 2*pi*t/T)` with a quadratic amplitude envelope `A(x) = a0 + a1*x + a2*x^2`.
//! `x` is arclength along the straightened body, zero at the nose and
//! `body_length` at the tail tip. All lengths are meters, time is seconds,
//! phases are radians.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the midline wave.
///
/// Invariants (enforced by [`MidlineParams::new`]): `wavelength`, `period`
/// and `body_length` are positive and finite, and `|A(x)| < body_length / 2`
/// everywhere on `[0, body_length]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MidlineParams {
    /// Constant envelope coefficient, m.
    pub a0: f64,
    /// Linear envelope coefficient, dimensionless (m per m).
    pub a1: f64,
    /// Quadratic envelope coefficient, 1/m.
    pub a2: f64,
    /// Body-wave wavelength, m.
    pub wavelength: f64,
    /// Tail-beat period, s.
    pub period: f64,
    /// Nose-to-tail-tip length, m.
    pub body_length: f64,
}

impl MidlineParams {
    pub fn new(
        a0: f64,
        a1: f64,
        a2: f64,
        wavelength: f64,
        period: f64,
        body_length: f64,
    ) -> Result<Self> {
        let p = MidlineParams {
            a0,
            a1,
            a2,
            wavelength,
            period,
            body_length,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("wavelength", self.wavelength),
            ("period", self.period),
            ("body_length", self.body_length),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Domain(format!(
                    "midline {name} must be positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [("a0", self.a0), ("a1", self.a1), ("a2", self.a2)] {
            if !v.is_finite() {
                return Err(Error::Domain(format!(
                    "midline coefficient {name} must be finite"
                )));
            }
        }
        let peak = self.max_abs_envelope();
        if peak >= 0.5 * self.body_length {
            return Err(Error::Domain(format!(
                "envelope peak {peak:.4} m reaches half the body length \
                 ({:.4} m); amplitude is implausibly large",
                self.body_length
            )));
        }
        Ok(())
    }

    /// Largest `|A(x)|` on `[0, body_length]`.
    ///
    /// A quadratic attains its extrema at the interval ends or at its vertex.
    fn max_abs_envelope(&self) -> f64 {
        let mut peak = self
            .envelope_unchecked(0.0)
            .abs()
            .max(self.envelope_unchecked(self.body_length).abs());
        if self.a2 != 0.0 {
            let vertex = -self.a1 / (2.0 * self.a2);
            if vertex > 0.0 && vertex < self.body_length {
                peak = peak.max(self.envelope_unchecked(vertex).abs());
            }
        }
        peak
    }

    fn envelope_unchecked(&self, x: f64) -> f64 {
        self.a0 + self.a1 * x + self.a2 * x * x
    }

    fn check_station(&self, x: f64) -> Result<()> {
        if !x.is_finite() || x < 0.0 || x > self.body_length {
            return Err(Error::Domain(format!(
                "body station x = {x} m lies outside [0, {}]",
                self.body_length
            )));
        }
        Ok(())
    }

    /// Amplitude envelope `A(x)` at body station `x`, m.
    pub fn amplitude_envelope(&self, x: f64) -> Result<f64> {
        self.check_station(x)?;
        Ok(self.envelope_unchecked(x))
    }

    /// Envelope slope `A'(x) = a1 + 2*a2*x` at body station `x`, dimensionless.
    pub fn envelope_slope(&self, x: f64) -> Result<f64> {
        self.check_station(x)?;
        Ok(self.a1 + 2.0 * self.a2 * x)
    }

    /// Lateral displacement `h(x, t)`, m. Exactly periodic in `t` with period
    /// `period`.
    pub fn lateral_displacement(&self, x: f64, t: f64) -> Result<f64> {
        self.check_station(x)?;
        let phase = TAU * x / self.wavelength - TAU * t / self.period;
        Ok(self.envelope_unchecked(x) * phase.sin())
    }

    /// `n` equidistant `(x, h(x, t))` samples from nose to tail tip.
    pub fn sample_midline(&self, t: f64, n: usize) -> Result<Vec<(f64, f64)>> {
        if n < 2 {
            return Err(Error::Argument(format!(
                "midline sampling needs at least 2 points, got {n}"
            )));
        }
        let step = self.body_length / (n - 1) as f64;
        (0..n)
            .map(|i| {
                // The last station is pinned to body_length so rounding in the
                // step never pushes x outside the valid interval.
                let x = if i + 1 == n {
                    self.body_length
                } else {
                    i as f64 * step
                };
                Ok((x, self.lateral_displacement(x, t)?))
            })
            .collect()
    }

    /// Tail-tip excursion over one cycle: `2 * |A(body_length)|`, m.
    pub fn peak_to_peak_amplitude(&self) -> f64 {
        2.0 * self.envelope_unchecked(self.body_length).abs()
    }

    /// Same wave with all envelope coefficients multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::Domain(format!(
                "envelope scale factor must be finite and non-negative, got {factor}"
            )));
        }
        MidlineParams::new(
            self.a0 * factor,
            self.a1 * factor,
            self.a2 * factor,
            self.wavelength,
            self.period,
            self.body_length,
        )
    }

    /// Same wave with a different period, s.
    pub fn with_period(&self, period: f64) -> Result<Self> {
        MidlineParams::new(
            self.a0,
            self.a1,
            self.a2,
            self.wavelength,
            period,
            self.body_length,
        )
    }

    /// Body-wave propagation speed `wavelength / period`, m/s.
    pub fn wave_speed(&self) -> f64 {
        self.wavelength / self.period
    }
}
