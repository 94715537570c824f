//! TOML experiment configuration.
//!
//! One file describes a whole experiment: the fixed plant, the calibrated
//! model coefficients, the gaits and fin schedules to run, the sweep grid,
//! and where outputs go. Every section has defaults, so an empty file is a
//! valid experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::{FreeParameters, PlantConstants};
use crate::dynamics::{FinSchedule, Gait, DEFAULT_DT, MAX_DT};
use crate::error::{Error, Result};
use crate::hydro::FinState;
use crate::sweep::RunOptions;

/// One named fin schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub name: String,
    /// `(switch time s, fin state)` pairs, first at exactly 0.
    pub entries: FinSchedule,
}

/// Frequency-sweep settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// First grid frequency, Hz.
    pub f_start: f64,
    /// Last grid frequency, Hz (inclusive).
    pub f_stop: f64,
    /// Grid spacing, Hz.
    pub f_step: f64,
    /// Fin states to sweep.
    pub states: Vec<FinState>,
    /// Straight-run duration per cell, s.
    pub duration: f64,
    /// Turning-run duration per cell, s.
    pub turn_duration: f64,
    /// Tail bias for turning runs, deg.
    pub turn_bias: f64,
    /// Leading stretch of each turning run dropped before fitting, s.
    pub turn_trim: f64,
    /// Tail-beat amplitude command, deg.
    pub amplitude: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            f_start: 1.0,
            f_stop: 3.0,
            f_step: 0.2,
            states: vec![FinState::Folded, FinState::Erected],
            duration: 30.0,
            turn_duration: 60.0,
            turn_bias: 30.0,
            turn_trim: 20.0,
            amplitude: 20.0,
        }
    }
}

impl SweepConfig {
    /// The grid in integer millihertz. Conversion through millihertz keeps
    /// the grid exact: `1.0..=3.0 step 0.2` yields precisely 11 cells no
    /// matter how the endpoints round in binary.
    pub fn grid_mhz(&self) -> Result<Vec<u32>> {
        let to_mhz = |f: f64, what: &str| -> Result<i64> {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::Config(format!("sweep.{what} must be positive, got {f}")));
            }
            Ok((f * 1000.0).round() as i64)
        };
        let start = to_mhz(self.f_start, "f_start")?;
        let stop = to_mhz(self.f_stop, "f_stop")?;
        let step = to_mhz(self.f_step, "f_step")?;
        if step < 1 {
            return Err(Error::Config(format!(
                "sweep.f_step must be at least 0.001 Hz, got {}",
                self.f_step
            )));
        }
        if stop < start {
            return Err(Error::Config(format!(
                "sweep.f_stop {} is below sweep.f_start {}",
                self.f_stop, self.f_start
            )));
        }
        Ok((start..=stop)
            .step_by(step as usize)
            .map(|m| m as u32)
            .collect())
    }

    /// Per-cell run settings for this sweep at integration step `dt`.
    pub fn run_options(&self, dt: f64) -> RunOptions {
        RunOptions {
            dt,
            straight_duration: self.duration,
            turn_duration: self.turn_duration,
            turn_trim: self.turn_trim,
            turn_bias: self.turn_bias,
            amplitude: self.amplitude,
            with_turns: true,
        }
    }
}

/// Output locations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for sweep tables and charts.
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: "out".into() }
    }
}

/// A whole experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Seed for every randomized step (calibration restarts).
    pub seed: u64,
    /// Integration step, s.
    pub dt: f64,
    /// Number of synthetic tracking markers along the body.
    pub markers: u32,
    /// Marker used for speed extraction when ingesting tracks; defaults to
    /// a mid-body marker.
    pub speed_marker: Option<u32>,
    pub plant: PlantConstants,
    pub model: FreeParameters,
    pub gaits: Vec<Gait>,
    pub schedules: Vec<ScheduleConfig>,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            dt: DEFAULT_DT,
            markers: 10,
            speed_marker: None,
            plant: PlantConstants::default(),
            model: FreeParameters::default(),
            gaits: vec![Gait {
                frequency: 2.6,
                amplitude_command: 20.0,
                turn_bias: 0.0,
            }],
            schedules: vec![ScheduleConfig {
                name: "always_folded".into(),
                entries: FinSchedule::constant(FinState::Folded),
            }],
            sweep: SweepConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parse a configuration file. Missing sections fall back to defaults;
    /// unknown keys are rejected with the parser's position information.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Check everything the type system cannot.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || self.dt > MAX_DT {
            return Err(Error::Config(format!(
                "dt must be in (0, {MAX_DT}] s, got {}",
                self.dt
            )));
        }
        if self.markers < 2 {
            return Err(Error::Config(format!(
                "markers must be at least 2, got {}",
                self.markers
            )));
        }
        self.model
            .robot_params(&self.plant)
            .validate()
            .map_err(|e| Error::Config(format!("model: {e}")))?;
        let base = self.model.base_midline(&self.plant);
        crate::kinematics::MidlineParams::new(
            base.a0,
            base.a1,
            base.a2,
            base.wavelength,
            base.period,
            base.body_length,
        )
        .map_err(|e| Error::Config(format!("model midline: {e}")))?;
        if self.gaits.is_empty() {
            return Err(Error::Config("at least one [[gaits]] entry is required".into()));
        }
        for (i, gait) in self.gaits.iter().enumerate() {
            gait.validate()
                .map_err(|e| Error::Config(format!("gaits[{i}]: {e}")))?;
        }
        if self.schedules.is_empty() {
            return Err(Error::Config(
                "at least one [[schedules]] entry is required".into(),
            ));
        }
        for (i, s) in self.schedules.iter().enumerate() {
            if s.name.trim().is_empty() {
                return Err(Error::Config(format!("schedules[{i}]: empty name")));
            }
            if self.schedules[..i].iter().any(|other| other.name == s.name) {
                return Err(Error::Config(format!(
                    "schedules[{i}]: duplicate name '{}'",
                    s.name
                )));
            }
        }
        if self.sweep.states.is_empty() {
            return Err(Error::Config("sweep.states must not be empty".into()));
        }
        for (what, v) in [
            ("sweep.duration", self.sweep.duration),
            ("sweep.turn_duration", self.sweep.turn_duration),
            ("sweep.amplitude", self.sweep.amplitude),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{what} must be positive, got {v}")));
            }
        }
        if !(self.sweep.turn_trim >= 0.0) || self.sweep.turn_trim >= self.sweep.turn_duration {
            return Err(Error::Config(format!(
                "sweep.turn_trim must be in [0, turn_duration), got {}",
                self.sweep.turn_trim
            )));
        }
        self.sweep.grid_mhz()?;
        Ok(())
    }

    /// Look up a named schedule.
    pub fn schedule(&self, name: &str) -> Result<&FinSchedule> {
        self.schedules
            .iter()
            .find(|s| s.name == name)
            .map(|s| &s.entries)
            .ok_or_else(|| {
                let known: Vec<&str> = self.schedules.iter().map(|s| s.name.as_str()).collect();
                Error::Argument(format!(
                    "no schedule named '{name}' (known: {})",
                    known.join(", ")
                ))
            })
    }
}

/// Environment variable that overrides the configured seed.
pub const SEED_ENV_VAR: &str = "FINFOLD_SEED";

/// Resolve the seed: a command-line flag wins, then [`SEED_ENV_VAR`], then
/// the configuration value.
pub fn effective_seed(flag: Option<u64>, config: &ExperimentConfig) -> Result<u64> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var(SEED_ENV_VAR) {
        Ok(text) => text.trim().parse().map_err(|_| {
            Error::Config(format!(
                "{SEED_ENV_VAR} must be an unsigned integer, got '{text}'"
            ))
        }),
        Err(std::env::VarError::NotPresent) => Ok(config.seed),
        Err(e) => Err(Error::Config(format!("{SEED_ENV_VAR}: {e}"))),
    }
}
