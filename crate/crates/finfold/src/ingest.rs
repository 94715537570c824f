//! CSV exchange: simulated runs, synthetic tracking markers, and the
//! reverse path from marker tracks back to a trajectory.
//!
//! Two formats are spoken here. A *run* file is one row per integration
//! step with the full state (`t,x,y,heading,speed,fin,p_caudal,p_dorsal`).
//! A *marker* file mimics video tracking: one row per marker sighting
//! (`t,marker_id,x,y`), markers interleaved within each frame. Numeric
//! columns are written with six decimals, so files are byte-stable across
//! runs and platforms.

use std::path::Path;
use std::str::FromStr;

use crate::dynamics::{effective_midline, Gait, Sample, Trajectory};
use crate::error::{Error, Result};
use crate::hydro::{FinState, RobotParams};
use crate::kinematics::MidlineParams;

const RUN_HEADER: [&str; 8] = ["t", "x", "y", "heading", "speed", "fin", "p_caudal", "p_dorsal"];
const MARKER_HEADER: [&str; 4] = ["t", "marker_id", "x", "y"];

fn parse_field<T: FromStr>(record_at: Option<&str>, line: u64, what: &str) -> Result<T> {
    let text = record_at
        .ok_or_else(|| Error::Parse(format!("line {line}: missing {what} column")))?;
    text.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} value '{text}'")))
}

fn check_header(record: &csv::StringRecord, expected: &[&str], path: &Path) -> Result<()> {
    let got: Vec<&str> = record.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::Parse(format!(
            "{}: expected header '{}', got '{}'",
            path.display(),
            expected.join(","),
            got.join(",")
        )));
    }
    Ok(())
}

/// Write a run file. Six-decimal fixed formatting keeps output bytes
/// identical across repeated runs.
pub fn write_run_csv(traj: &Trajectory, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RUN_HEADER)?;
    for s in traj.samples() {
        w.write_record([
            format!("{:.6}", s.t),
            format!("{:.6}", s.x),
            format!("{:.6}", s.y),
            format!("{:.6}", s.heading),
            format!("{:.6}", s.speed),
            s.fin.label().to_string(),
            format!("{:.6}", s.p_caudal),
            format!("{:.6}", s.p_dorsal),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a run file back into a trajectory. The time column must form a
/// uniform grid; its spacing becomes the trajectory step.
pub fn read_run_csv(path: &Path) -> Result<Trajectory> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    check_header(r.headers()?, &RUN_HEADER, path)?;
    let mut samples = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i as u64 + 2;
        let fin_text: String = parse_field(record.get(5), line, "fin")?;
        samples.push(Sample {
            t: parse_field(record.get(0), line, "t")?,
            x: parse_field(record.get(1), line, "x")?,
            y: parse_field(record.get(2), line, "y")?,
            heading: parse_field(record.get(3), line, "heading")?,
            speed: parse_field(record.get(4), line, "speed")?,
            fin: FinState::from_str(&fin_text)?,
            p_caudal: parse_field(record.get(6), line, "p_caudal")?,
            p_dorsal: parse_field(record.get(7), line, "p_dorsal")?,
        });
    }
    if samples.len() < 2 {
        return Err(Error::Parse(format!(
            "{}: a run needs at least 2 rows, got {}",
            path.display(),
            samples.len()
        )));
    }
    let dt = samples[1].t - samples[0].t;
    Trajectory::new(dt, samples)
}

/// Export a simulated run as synthetic tracking markers.
///
/// `markers` stations are spaced evenly from nose (station 0, the tracked
/// reference point) to tail tip. Each sighting places the station's
/// body-frame point `(-station, lateral displacement)` into the world by
/// the sample's pose; the lateral displacement uses the effective midline
/// for the sample's fin state, so a mid-run fold shows up in the tracks.
pub fn write_marker_csv(
    traj: &Trajectory,
    robot: &RobotParams,
    base: &MidlineParams,
    gait: &Gait,
    markers: u32,
    path: &Path,
) -> Result<()> {
    if markers < 2 {
        return Err(Error::Argument(format!(
            "marker export needs at least 2 markers, got {markers}"
        )));
    }
    let folded = effective_midline(base, robot, gait, FinState::Folded)?;
    let erected = effective_midline(base, robot, gait, FinState::Erected)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(MARKER_HEADER)?;
    let length = base.body_length;
    for s in traj.samples() {
        let midline = match s.fin {
            FinState::Folded => &folded,
            FinState::Erected => &erected,
        };
        let (sin_h, cos_h) = s.heading.sin_cos();
        for m in 0..markers {
            let station = length * m as f64 / (markers - 1) as f64;
            let lateral = midline.lateral_displacement(station, s.t)?;
            let bx = -station;
            w.write_record([
                format!("{:.6}", s.t),
                m.to_string(),
                format!("{:.6}", s.x + bx * cos_h - lateral * sin_h),
                format!("{:.6}", s.y + bx * sin_h + lateral * cos_h),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One marker's sightings, time-ordered.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkerTrack {
    pub id: u32,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Read a marker file into per-marker tracks, sorted by marker id.
///
/// The file's time column must be globally non-decreasing (frames in
/// order) and strictly increasing within each marker (no duplicate
/// sightings).
pub fn read_marker_csv(path: &Path) -> Result<Vec<MarkerTrack>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    check_header(r.headers()?, &MARKER_HEADER, path)?;
    let mut tracks: Vec<MarkerTrack> = Vec::new();
    let mut last_t = f64::NEG_INFINITY;
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i as u64 + 2;
        let t: f64 = parse_field(record.get(0), line, "t")?;
        let id: u32 = parse_field(record.get(1), line, "marker_id")?;
        let x: f64 = parse_field(record.get(2), line, "x")?;
        let y: f64 = parse_field(record.get(3), line, "y")?;
        if !t.is_finite() {
            return Err(Error::Parse(format!("line {line}: non-finite time")));
        }
        if t < last_t {
            return Err(Error::Parse(format!(
                "line {line}: time {t} runs backwards (previous row was {last_t})"
            )));
        }
        last_t = t;
        let track = match tracks.iter_mut().find(|track| track.id == id) {
            Some(track) => track,
            None => {
                tracks.push(MarkerTrack {
                    id,
                    t: Vec::new(),
                    x: Vec::new(),
                    y: Vec::new(),
                });
                tracks.last_mut().unwrap()
            }
        };
        if let Some(&prev) = track.t.last() {
            if t <= prev {
                return Err(Error::Parse(format!(
                    "line {line}: marker {id} sighted twice at time {t}"
                )));
            }
        }
        track.t.push(t);
        track.x.push(x);
        track.y.push(y);
    }
    if tracks.is_empty() {
        return Err(Error::Parse(format!(
            "{}: no marker sightings",
            path.display()
        )));
    }
    tracks.sort_by_key(|track| track.id);
    Ok(tracks)
}

/// Pick the marker used for speed extraction: an explicit override (which
/// must exist) or the marker about a third of the way down the body, where
/// lateral undulation is weakest.
pub fn pick_speed_marker(tracks: &[MarkerTrack], requested: Option<u32>) -> Result<u32> {
    if tracks.is_empty() {
        return Err(Error::Argument("no marker tracks to pick from".into()));
    }
    if let Some(id) = requested {
        if tracks.iter().any(|track| track.id == id) {
            return Ok(id);
        }
        let known: Vec<String> = tracks.iter().map(|track| track.id.to_string()).collect();
        return Err(Error::Argument(format!(
            "no marker {id} in the file (markers present: {})",
            known.join(", ")
        )));
    }
    let index = (0.35 * (tracks.len() - 1) as f64).round() as usize;
    Ok(tracks[index].id)
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    values[values.len() / 2]
}

/// Resample one track onto a uniform grid and differentiate it into a
/// trajectory: heading from the velocity direction, speed from centered
/// differences (one-sided at the ends). The fin state is unknown from
/// tracking alone and is recorded as folded with zero power draw.
///
/// `dt` defaults to the track's median sampling interval. A gap larger
/// than three median intervals is rejected rather than bridged.
pub fn track_to_trajectory(track: &MarkerTrack, dt: Option<f64>) -> Result<Trajectory> {
    if track.t.len() < 4 {
        return Err(Error::Argument(format!(
            "marker {} has {} sightings; at least 4 are needed",
            track.id,
            track.t.len()
        )));
    }
    let diffs: Vec<f64> = track.t.windows(2).map(|w| w[1] - w[0]).collect();
    let med = median(diffs.clone());
    if !(med > 0.0) {
        return Err(Error::DegenerateData(format!(
            "marker {}: zero median sampling interval",
            track.id
        )));
    }
    for (i, d) in diffs.iter().enumerate() {
        if *d > 3.0 * med {
            return Err(Error::DegenerateData(format!(
                "marker {}: {:.3} s gap after t = {:.3} s (median interval {:.4} s)",
                track.id,
                d,
                track.t[i],
                med
            )));
        }
    }
    let dt = match dt {
        Some(v) if v > 0.0 && v.is_finite() => v,
        Some(v) => {
            return Err(Error::Argument(format!(
                "resampling step must be positive, got {v}"
            )))
        }
        None => med,
    };

    let t0 = track.t[0];
    let t_end = *track.t.last().unwrap();
    let n = ((t_end - t0) / dt + 1e-9).floor() as usize + 1;
    if n < 4 {
        return Err(Error::Argument(format!(
            "marker {}: too short to resample at dt = {dt} s",
            track.id
        )));
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut cursor = 0;
    for i in 0..n {
        let t = t0 + i as f64 * dt;
        while cursor + 2 < track.t.len() && track.t[cursor + 1] <= t {
            cursor += 1;
        }
        let (ta, tb) = (track.t[cursor], track.t[cursor + 1]);
        let w = ((t - ta) / (tb - ta)).clamp(0.0, 1.0);
        xs.push(track.x[cursor] + w * (track.x[cursor + 1] - track.x[cursor]));
        ys.push(track.y[cursor] + w * (track.y[cursor + 1] - track.y[cursor]));
    }

    let deriv = |v: &[f64], i: usize| -> f64 {
        if i == 0 {
            (v[1] - v[0]) / dt
        } else if i == n - 1 {
            (v[n - 1] - v[n - 2]) / dt
        } else {
            (v[i + 1] - v[i - 1]) / (2.0 * dt)
        }
    };
    let samples: Vec<Sample> = (0..n)
        .map(|i| {
            let vx = deriv(&xs, i);
            let vy = deriv(&ys, i);
            Sample {
                t: t0 + i as f64 * dt,
                x: xs[i],
                y: ys[i],
                heading: vy.atan2(vx),
                speed: vx.hypot(vy),
                fin: FinState::Folded,
                p_caudal: 0.0,
                p_dorsal: 0.0,
            }
        })
        .collect();
    Trajectory::new(dt, samples)
}

/// Read a marker file and turn the speed marker's track into a trajectory.
pub fn ingest_trajectory_csv(
    path: &Path,
    speed_marker: Option<u32>,
    dt: Option<f64>,
) -> Result<Trajectory> {
    let tracks = read_marker_csv(path)?;
    let id = pick_speed_marker(&tracks, speed_marker)?;
    let track = tracks.iter().find(|track| track.id == id).unwrap();
    track_to_trajectory(track, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{analyze_run, fit_turning};
    use crate::calibration::{FreeParameters, PlantConstants};
    use crate::dynamics::{simulate_straight, simulate_turn, FinSchedule};
    use std::io::Write as _;

    fn model() -> (RobotParams, MidlineParams) {
        let plant = PlantConstants::default();
        let fp = FreeParameters::default();
        (fp.robot_params(&plant), fp.base_midline(&plant))
    }

    fn cruise_gait() -> Gait {
        Gait {
            frequency: 2.6,
            amplitude_command: 20.0,
            turn_bias: 0.0,
        }
    }

    #[test]
    fn run_csv_round_trips() {
        let (robot, base) = model();
        let traj = simulate_straight(
            &robot,
            &base,
            &cruise_gait(),
            &FinSchedule::constant(FinState::Folded),
            5.0,
            0.002,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_run_csv(&traj, &path).unwrap();
        let back = read_run_csv(&path).unwrap();
        assert_eq!(back.len(), traj.len());
        for (a, b) in back.samples().iter().zip(traj.samples()) {
            assert!((a.t - b.t).abs() < 1e-6);
            assert!((a.x - b.x).abs() < 1e-6);
            assert!((a.speed - b.speed).abs() < 1e-6);
            assert_eq!(a.fin, b.fin);
        }

        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,x,y,heading,speed,fin,p_caudal,p_dorsal\n"));

        // Byte-stable: writing again is identical.
        let path2 = dir.path().join("run2.csv");
        write_run_csv(&traj, &path2).unwrap();
        assert_eq!(text, std::fs::read_to_string(&path2).unwrap());
    }

    #[test]
    fn run_csv_rejects_wrong_headers_and_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "time,x\n0,1\n").unwrap();
        let err = read_run_csv(&path).unwrap_err();
        assert_eq!(err.class(), "parse");

        std::fs::write(
            &path,
            "t,x,y,heading,speed,fin,p_caudal,p_dorsal\n0.0,0,0,0,oops,folded,0,0\n0.002,0,0,0,0,folded,0,0\n",
        )
        .unwrap();
        let err = read_run_csv(&path).unwrap_err();
        assert_eq!(err.class(), "parse");
        assert!(err.to_string().contains("speed"));
    }

    #[test]
    fn marker_export_round_trips_to_the_same_cruise_speed() {
        let (robot, base) = model();
        let gait = cruise_gait();
        let traj = simulate_straight(
            &robot,
            &base,
            &gait,
            &FinSchedule::constant(FinState::Folded),
            20.0,
            0.002,
        )
        .unwrap();
        let direct = analyze_run(&traj).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("markers.csv");
        write_marker_csv(&traj, &robot, &base, &gait, 10, &path).unwrap();

        let tracks = read_marker_csv(&path).unwrap();
        assert_eq!(tracks.len(), 10);
        assert_eq!(pick_speed_marker(&tracks, None).unwrap(), 3);
        assert_eq!(pick_speed_marker(&tracks, Some(7)).unwrap(), 7);
        assert!(pick_speed_marker(&tracks, Some(99)).is_err());

        let ingested = ingest_trajectory_csv(&path, None, None).unwrap();
        let from_markers = analyze_run(&ingested).unwrap();
        assert!(
            (from_markers.steady_speed - direct.steady_speed).abs()
                <= 0.01 * direct.steady_speed,
            "markers {} vs direct {}",
            from_markers.steady_speed,
            direct.steady_speed
        );
    }

    #[test]
    fn turning_markers_recover_the_circle() {
        let (robot, base) = model();
        let gait = Gait {
            frequency: 2.0,
            amplitude_command: 20.0,
            turn_bias: 30.0,
        };
        let traj = simulate_turn(&robot, &base, &gait, FinState::Erected, 60.0, 0.002).unwrap();
        let trimmed = traj.slice_from(20.0).unwrap();
        let direct = fit_turning(&trimmed).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("markers.csv");
        write_marker_csv(&trimmed, &robot, &base, &gait, 6, &path).unwrap();
        let ingested = ingest_trajectory_csv(&path, Some(0), None).unwrap();
        let from_markers = fit_turning(&ingested).unwrap();
        assert!(
            (from_markers.radius - direct.radius).abs() <= 0.02 * direct.radius,
            "markers {} vs direct {}",
            from_markers.radius,
            direct.radius
        );
        assert!(
            (from_markers.angular_speed - direct.angular_speed).abs()
                <= 0.02 * direct.angular_speed.abs()
        );
    }

    #[test]
    fn resampling_bridges_small_jitter_but_not_gaps() {
        // 50 Hz sampling with one dropped frame: fine. A 0.5 s hole: error.
        let mut track = MarkerTrack {
            id: 0,
            t: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
        };
        for i in 0..100 {
            if i == 40 {
                continue; // one dropped frame
            }
            let t = i as f64 * 0.02;
            track.t.push(t);
            track.x.push(0.3 * t);
            track.y.push(0.0);
        }
        let traj = track_to_trajectory(&track, None).unwrap();
        assert!((traj.dt() - 0.02).abs() < 1e-12);
        let mid = traj.samples()[traj.len() / 2];
        assert!((mid.speed - 0.3).abs() < 1e-9);

        track.t.push(2.6);
        track.x.push(0.78);
        track.y.push(0.0);
        let err = track_to_trajectory(&track, None).unwrap_err();
        assert_eq!(err.class(), "degenerate-data");
        assert!(err.to_string().contains("gap"));
    }

    #[test]
    fn marker_files_must_be_time_ordered() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("markers.csv");
        let mut file = std::fs::File::create(&path).unwrap();
        writeln!(file, "t,marker_id,x,y").unwrap();
        writeln!(file, "0.0,0,0.0,0.0").unwrap();
        writeln!(file, "0.1,0,0.1,0.0").unwrap();
        writeln!(file, "0.05,1,0.0,0.0").unwrap();
        drop(file);
        let err = read_marker_csv(&path).unwrap_err();
        assert_eq!(err.class(), "parse");
        assert!(err.to_string().contains("backwards"));

        let path2 = dir.path().join("dup.csv");
        let mut file = std::fs::File::create(&path2).unwrap();
        writeln!(file, "t,marker_id,x,y").unwrap();
        writeln!(file, "0.0,0,0.0,0.0").unwrap();
        writeln!(file, "0.0,0,0.1,0.0").unwrap();
        drop(file);
        let err = read_marker_csv(&path2).unwrap_err();
        assert_eq!(err.class(), "parse");
        assert!(err.to_string().contains("twice"));
    }
}
