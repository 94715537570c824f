//! Command-line front end: simulate runs, analyze and grade them, fit the
//! model, sweep the frequency grid, and render reports.
//!
//! Failures print one machine-parsable line, `error[<class>]: <message>`,
//! and exit with status 1; usage errors exit with status 2.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use finfold::analysis::{analyze_run, fit_turning, oscillation_peak_to_peak};
use finfold::calibration::{
    calibrate_model, validate_model, CalibrationTargets, FreeParameters,
};
use finfold::config::{effective_seed, ExperimentConfig};
use finfold::dynamics::{simulate_straight, simulate_turn, FinSchedule, Gait, Trajectory};
use finfold::error::{Error, Result};
use finfold::hydro::FinState;
use finfold::ingest::{
    ingest_trajectory_csv, read_marker_csv, read_run_csv, write_marker_csv, write_run_csv,
};
use finfold::metrics::{
    cost_of_transport, cot_split, reynolds, strouhal, KINEMATIC_VISCOSITY_WATER,
};
use finfold::report::{emit_report, write_metrics_csv};
use finfold::sweep::run_grid;

#[derive(Parser)]
#[command(
    name = "finfold",
    version,
    about = "Simulate and analyze an undulatory swimmer with erectable median fins"
)]
struct Cli {
    /// Experiment configuration file (TOML); defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Model coefficients from a calibration file (JSON), overriding the
    /// configuration's `[model]` section.
    #[arg(long, global = true, value_name = "FILE")]
    model: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write it as a run CSV (and optionally markers).
    Simulate(SimulateArgs),
    /// Fit the acceleration/cruise phases, or a turning circle, of a run.
    Analyze(AnalyzeArgs),
    /// Compute transport cost, Strouhal, and Reynolds numbers for a run.
    Metrics(MetricsArgs),
    /// Fit the free parameters to the pinned targets and write them out.
    Calibrate(CalibrateArgs),
    /// Sweep the grid and check every claim the model must reproduce.
    Validate,
    /// Run the frequency sweep and write the metrics table.
    Sweep(SweepArgs),
    /// Run the frequency sweep and write the full report (table + charts).
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Tail-beat frequency, Hz (default: the configuration's first gait).
    #[arg(long)]
    frequency: Option<f64>,
    /// Tail-beat amplitude command, deg.
    #[arg(long)]
    amplitude: Option<f64>,
    /// Tail bias, deg (used by --turn).
    #[arg(long)]
    bias: Option<f64>,
    /// Constant fin state: folded or erected.
    #[arg(long, conflicts_with = "schedule")]
    fin: Option<String>,
    /// Named fin schedule from the configuration.
    #[arg(long)]
    schedule: Option<String>,
    /// Run a planar turning simulation instead of a straight run.
    #[arg(long, conflicts_with = "schedule")]
    turn: bool,
    /// Run duration, s.
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    /// Integration step override, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Output run CSV.
    #[arg(long, default_value = "run.csv")]
    out: PathBuf,
    /// Also write synthetic tracking markers to this CSV.
    #[arg(long, value_name = "FILE")]
    markers_out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Run CSV to analyze.
    #[arg(long, required_unless_present = "markers", conflicts_with = "markers")]
    run: Option<PathBuf>,
    /// Marker CSV to ingest instead of a run file.
    #[arg(long)]
    markers: Option<PathBuf>,
    /// Marker id used for speed extraction (marker files only).
    #[arg(long)]
    speed_marker: Option<u32>,
    /// Resampling step for marker ingest, s (default: the file's median
    /// sampling interval).
    #[arg(long)]
    resample_dt: Option<f64>,
    /// Fit a turning circle instead of the straight-run phases.
    #[arg(long)]
    turning: bool,
    /// Drop everything before this time before fitting, s.
    #[arg(long)]
    from: Option<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    /// Run CSV to grade.
    #[arg(long)]
    run: PathBuf,
    /// Tail-beat frequency of the run, Hz.
    #[arg(long)]
    frequency: f64,
    /// Marker CSV for measuring the tail peak-to-peak excursion.
    #[arg(long, value_name = "FILE")]
    markers: Option<PathBuf>,
    /// Tail peak-to-peak excursion, m (overrides --markers).
    #[arg(long)]
    peak_to_peak: Option<f64>,
    /// Body mass override, kg (default: the configuration's plant).
    #[arg(long)]
    mass: Option<f64>,
    /// Body length override, m (default: the configuration's plant).
    #[arg(long)]
    length: Option<f64>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Seed override (wins over FINFOLD_SEED and the configuration).
    #[arg(long)]
    seed: Option<u64>,
    /// Output calibration file (JSON).
    #[arg(long, default_value = "calibration.json")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Output metrics table (default: <output.dir>/metrics.csv).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run the grid on one thread.
    #[arg(long)]
    serial: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Output directory (default: the configuration's output.dir).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    if let Err(e) = run(cli) {
        eprintln!("error[{}]: {e}", e.class());
        std::process::exit(1);
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn load_model(config: &mut ExperimentConfig, path: &Option<PathBuf>) -> Result<()> {
    if let Some(p) = path {
        let text = std::fs::read_to_string(p)?;
        config.model = FreeParameters::from_calibration_json(&text)?;
        config.validate()?;
    }
    Ok(())
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Parse(format!("serializing output: {e}")))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli.config)?;
    load_model(&mut config, &cli.model)?;
    match cli.command {
        Command::Simulate(args) => simulate(&config, args),
        Command::Analyze(args) => analyze(&config, args),
        Command::Metrics(args) => metrics(&config, args),
        Command::Calibrate(args) => calibrate(&config, args),
        Command::Validate => validate(&config),
        Command::Sweep(args) => sweep(&config, args),
        Command::Report(args) => report(&config, args),
    }
}

fn simulate(config: &ExperimentConfig, args: SimulateArgs) -> Result<()> {
    let default_gait = config.gaits[0];
    let gait = Gait {
        frequency: args.frequency.unwrap_or(default_gait.frequency),
        amplitude_command: args.amplitude.unwrap_or(default_gait.amplitude_command),
        turn_bias: args.bias.unwrap_or(default_gait.turn_bias),
    };
    let dt = args.dt.unwrap_or(config.dt);
    let robot = config.model.robot_params(&config.plant);
    let base = config.model.base_midline(&config.plant);

    let parse_fin = |text: &str| FinState::from_str(text);
    let traj: Trajectory = if args.turn {
        let fin = parse_fin(args.fin.as_deref().unwrap_or("folded"))?;
        simulate_turn(&robot, &base, &gait, fin, args.duration, dt)?
    } else {
        let schedule = match (&args.fin, &args.schedule) {
            (Some(fin), None) => FinSchedule::constant(parse_fin(fin)?),
            (None, Some(name)) => config.schedule(name)?.clone(),
            (None, None) => FinSchedule::constant(FinState::Folded),
            (Some(_), Some(_)) => unreachable!("clap rejects --fin with --schedule"),
        };
        simulate_straight(&robot, &base, &gait, &schedule, args.duration, dt)?
    };

    write_run_csv(&traj, &args.out)?;
    println!("{}", args.out.display());
    if let Some(markers_out) = &args.markers_out {
        write_marker_csv(&traj, &robot, &base, &gait, config.markers, markers_out)?;
        println!("{}", markers_out.display());
    }
    Ok(())
}

fn analyze(config: &ExperimentConfig, args: AnalyzeArgs) -> Result<()> {
    let traj = match (&args.run, &args.markers) {
        (Some(run), None) => read_run_csv(run)?,
        (None, Some(markers)) => ingest_trajectory_csv(
            markers,
            args.speed_marker.or(config.speed_marker),
            args.resample_dt,
        )?,
        _ => unreachable!("clap enforces exactly one input"),
    };
    let traj = match args.from {
        Some(from) => traj.slice_from(from)?,
        None => traj,
    };
    if args.turning {
        print_json(&fit_turning(&traj)?)
    } else {
        print_json(&analyze_run(&traj)?)
    }
}

fn metrics(config: &ExperimentConfig, args: MetricsArgs) -> Result<()> {
    let traj = read_run_csv(&args.run)?;
    let mass = args.mass.unwrap_or(config.plant.mass);
    let length = args.length.unwrap_or(config.plant.body_length);
    let run = analyze_run(&traj)?;

    let mean_speed = traj.mean_speed_over_ground();
    let (p_caudal, p_dorsal) = traj.mean_power_split();
    let cot_total = cost_of_transport(traj.mean_power(), mass, mean_speed)?;
    let (cot_caudal, cot_dorsal) = cot_split(p_caudal, p_dorsal, mass, mean_speed)?;

    let peak_to_peak = match (args.peak_to_peak, &args.markers) {
        (Some(pp), _) => Some(pp),
        (None, Some(path)) => {
            let tracks = read_marker_csv(path)?;
            let tail = tracks.last().expect("read_marker_csv returns tracks");
            Some(oscillation_peak_to_peak(&tail.y)?)
        }
        (None, None) => None,
    };
    let st = peak_to_peak
        .map(|pp| strouhal(args.frequency, pp, run.steady_speed))
        .transpose()?;

    #[derive(serde::Serialize)]
    struct MetricsOut {
        mean_speed: f64,
        steady_speed: f64,
        mean_power: f64,
        cot_total: f64,
        cot_caudal: f64,
        cot_dorsal: f64,
        #[serde(skip_serializing_if = "Option::is_none")]
        strouhal: Option<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        st_in_optimal_range: Option<bool>,
        reynolds: f64,
    }
    print_json(&MetricsOut {
        mean_speed,
        steady_speed: run.steady_speed,
        mean_power: traj.mean_power(),
        cot_total,
        cot_caudal,
        cot_dorsal,
        strouhal: st.map(|s| s.value),
        st_in_optimal_range: st.map(|s| s.in_optimal_range),
        reynolds: reynolds(run.steady_speed, length, KINEMATIC_VISCOSITY_WATER),
    })
}

fn calibrate(config: &ExperimentConfig, args: CalibrateArgs) -> Result<()> {
    let seed = effective_seed(args.seed, config)?;
    let targets = CalibrationTargets::default();
    let outcome = calibrate_model(&targets, &config.plant, &FreeParameters::bounds(), seed)?;
    std::fs::write(&args.out, outcome.to_json())?;
    println!("{}", args.out.display());
    for r in &outcome.residuals {
        println!(
            "{} {:<28} achieved {:>10.5}  residual {:>+9.5}",
            if r.within_tolerance { "ok  " } else { "MISS" },
            r.name,
            r.achieved,
            r.residual
        );
    }
    println!(
        "objective {:.3e} after {} evaluations (seed {seed})",
        outcome.objective, outcome.evaluations
    );
    if !outcome.converged {
        let missed = outcome
            .residuals
            .iter()
            .filter(|r| !r.within_tolerance)
            .count();
        return Err(Error::CalibrationFailure(format!(
            "{missed} of {} targets out of tolerance (parameters written to {})",
            outcome.residuals.len(),
            args.out.display()
        )));
    }
    Ok(())
}

fn validate(config: &ExperimentConfig) -> Result<()> {
    let report = validate_model(&config.model, &config.plant)?;
    for c in &report.checks {
        println!(
            "{} {:<32} {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    if !report.all_passed() {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        eprintln!(
            "error[validation]: {failed} of {} checks failed",
            report.checks.len()
        );
        std::process::exit(1);
    }
    Ok(())
}

fn sweep_cells(config: &ExperimentConfig, serial: bool) -> Result<Vec<finfold::CellOutcome>> {
    let robot = config.model.robot_params(&config.plant);
    let base = config.model.base_midline(&config.plant);
    let grid = config.sweep.grid_mhz()?;
    let opts = config.sweep.run_options(config.dt);
    let cells = if serial {
        finfold::run_grid_serial(&robot, &base, &grid, &config.sweep.states, &opts)
    } else {
        run_grid(&robot, &base, &grid, &config.sweep.states, &opts)
    };
    let failures = cells.iter().filter(|c| c.result.is_err()).count();
    if failures > 0 {
        eprintln!(
            "warning: {failures} of {} cells failed; see the notes column",
            cells.len()
        );
    }
    Ok(cells)
}

fn sweep(config: &ExperimentConfig, args: SweepArgs) -> Result<()> {
    let out = args
        .out
        .unwrap_or_else(|| config.output.dir.join("metrics.csv"));
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let cells = sweep_cells(config, args.serial)?;
    write_metrics_csv(&cells, &out)?;
    println!("{}", out.display());
    Ok(())
}

fn report(config: &ExperimentConfig, args: ReportArgs) -> Result<()> {
    let dir: &Path = args.out_dir.as_deref().unwrap_or(&config.output.dir);
    let cells = sweep_cells(config, false)?;
    for path in emit_report(&cells, dir)? {
        println!("{}", path.display());
    }
    Ok(())
}
