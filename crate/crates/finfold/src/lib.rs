//! Reduced-order swimming model of an undulatory robotic fish with
//! erectable median fins, with the analysis pipeline used to grade it:
//! acceleration and cruise fits, turning-circle fits, transport-cost and
//! Strouhal metrics, parameter calibration, and frequency sweeps.

pub mod analysis;
pub mod calibration;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod hydro;
pub mod ingest;
pub mod kinematics;
pub mod metrics;
pub mod report;
pub mod sweep;

pub use analysis::{
    analyze_run, detect_phases, fit_constant_acceleration, fit_steady_speed, fit_turning,
    oscillation_peak_to_peak, AccelFit, RunAnalysis, TurnFit,
};
pub use calibration::{
    calibrate_model, evaluate_residuals, validate_model, CalibrationOutcome, CalibrationTargets,
    FreeParameters, PlantConstants, ValidationReport,
};
pub use config::{effective_seed, ExperimentConfig};
pub use dynamics::{
    effective_midline, simulate_straight, simulate_turn, FinSchedule, Gait, Sample, Trajectory,
    DEFAULT_DT,
};
pub use error::{Error, Result};
pub use hydro::{FinState, PowerModel, RobotParams};
pub use ingest::{ingest_trajectory_csv, read_run_csv, write_marker_csv, write_run_csv};
pub use kinematics::MidlineParams;
pub use metrics::{cost_of_transport, reynolds, strouhal, SwimMetrics};
pub use report::emit_report;
pub use sweep::{run_grid, run_grid_serial, CellOutcome, CellResult, RunOptions};
