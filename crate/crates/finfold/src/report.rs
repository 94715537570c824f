//! Sweep reporting: the metrics table and frequency-response charts.
//!
//! Outputs are plain artifacts (CSV, self-contained SVG) built with fixed
//! decimal formatting, so regenerating a report from the same sweep
//! produces byte-identical files.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::hydro::FinState;
use crate::sweep::{CellOutcome, CellResult};

/// Metrics-table header, one column per reported quantity.
pub const METRICS_HEADER: &str = "f_hz,fin_state,speed_mps,accel_mps2,r2,cot_total,cot_caudal,\
                                  cot_dorsal,st,re,turn_radius_m,turn_omega_radps,notes";

const FOLDED_COLOR: &str = "#1f77b4";
const ERECTED_COLOR: &str = "#d62728";

fn num(v: f64) -> String {
    format!("{v:.6}")
}

/// Write the per-cell metrics table. Cells appear in sweep order; a failed
/// cell keeps its identity columns and carries the error in `notes` with
/// every numeric column empty.
pub fn write_metrics_csv(outcomes: &[CellOutcome], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(METRICS_HEADER.split(','))?;
    for outcome in outcomes {
        let f_hz = outcome.f_mhz as f64 / 1000.0;
        match &outcome.result {
            Ok(cell) => {
                let m = &cell.metrics;
                let (radius, omega) = match m.turn {
                    Some(turn) => (num(turn.radius), num(turn.angular_speed)),
                    None => (String::new(), String::new()),
                };
                w.write_record([
                    f_hz.to_string(),
                    outcome.fin.label().to_string(),
                    num(cell.steady_speed),
                    num(m.accel),
                    num(m.accel_r_squared),
                    num(m.cot_total),
                    num(m.cot_caudal),
                    num(m.cot_dorsal),
                    num(m.strouhal),
                    num(m.reynolds),
                    radius,
                    omega,
                    cell.notes.join(";"),
                ])?;
            }
            Err(e) => {
                let mut record = vec![f_hz.to_string(), outcome.fin.label().to_string()];
                record.extend(std::iter::repeat(String::new()).take(10));
                record.push(format!("error[{}]: {e}", e.class()));
                w.write_record(record)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

struct Series {
    label: &'static str,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

/// Optional shaded horizontal band drawn behind the data.
struct Band {
    lo: f64,
    hi: f64,
    label: &'static str,
}

fn tick_label(v: f64) -> String {
    let text = format!("{v:.3}");
    let text = text.trim_end_matches('0').trim_end_matches('.');
    if text.is_empty() || text == "-" {
        "0".into()
    } else {
        text.into()
    }
}

/// Render one line chart. Fixed 640x420 canvas, two-decimal coordinates.
fn svg_chart(title: &str, y_label: &str, series: &[Series], band: Option<Band>) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 78.0;
    const R: f64 = 620.0;
    const T: f64 = 52.0;
    const B: f64 = 368.0;

    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let (mut x_min, mut x_max) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.0), hi.max(p.0))
        });
    let (mut y_min, mut y_max) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.1), hi.max(p.1))
        });
    if let Some(b) = &band {
        y_min = y_min.min(b.lo);
        y_max = y_max.max(b.hi);
    }
    if !x_min.is_finite() {
        (x_min, x_max) = (0.0, 1.0);
    }
    if !y_min.is_finite() {
        (y_min, y_max) = (0.0, 1.0);
    }
    if x_max - x_min < 1e-12 {
        x_min -= 0.5;
        x_max += 0.5;
    }
    let pad = 0.06 * (y_max - y_min).max(1e-12_f64.max(0.05 * y_max.abs()));
    y_min -= pad;
    y_max += pad;

    let sx = |x: f64| L + (x - x_min) / (x_max - x_min) * (R - L);
    let sy = |y: f64| B - (y - y_min) / (y_max - y_min) * (B - T);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"Helvetica, Arial, sans-serif\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"28\" text-anchor=\"middle\" font-size=\"17\" \
         fill=\"#222\">{title}</text>\n",
        (L + R) / 2.0
    ));

    if let Some(b) = &band {
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" \
             fill=\"#2ca02c\" opacity=\"0.12\"/>\n",
            L,
            sy(b.hi),
            R - L,
            sy(b.lo) - sy(b.hi)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" fill=\"#2ca02c\">{}</text>\n",
            L + 6.0,
            sy(b.hi) - 4.0,
            b.label
        ));
    }

    // Y grid and ticks.
    for i in 0..=4 {
        let y = y_min + (y_max - y_min) * i as f64 / 4.0;
        let py = sy(y);
        svg.push_str(&format!(
            "<line x1=\"{L}\" y1=\"{py:.2}\" x2=\"{R}\" y2=\"{py:.2}\" \
             stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n"
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\" font-size=\"12\" \
             fill=\"#444\">{}</text>\n",
            L - 8.0,
            py + 4.0,
            tick_label(y)
        ));
    }
    // X ticks at each distinct frequency.
    let mut xs: Vec<f64> = all.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    let step = if xs.len() > 12 { 2 } else { 1 };
    for x in xs.iter().step_by(step) {
        let px = sx(*x);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{B}\" x2=\"{px:.2}\" y2=\"{:.2}\" \
             stroke=\"#333\" stroke-width=\"1\"/>\n",
            B + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{px:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"12\" \
             fill=\"#444\">{}</text>\n",
            B + 20.0,
            tick_label(*x)
        ));
    }

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{L}\" y1=\"{T}\" x2=\"{L}\" y2=\"{B}\" stroke=\"#333\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<line x1=\"{L}\" y1=\"{B}\" x2=\"{R}\" y2=\"{B}\" stroke=\"#333\" stroke-width=\"1.5\"/>\n"
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" fill=\"#222\">\
         tail-beat frequency (Hz)</text>\n",
        (L + R) / 2.0,
        B + 44.0
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{:.2}\" text-anchor=\"middle\" font-size=\"13\" fill=\"#222\" \
         transform=\"rotate(-90 20 {:.2})\">{y_label}</text>\n",
        (T + B) / 2.0,
        (T + B) / 2.0
    ));

    // Series lines, points, legend.
    for (i, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let mut sorted = s.points.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let path: Vec<String> = sorted
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            path.join(" "),
            s.color
        ));
        for &(x, y) in &sorted {
            svg.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/>\n",
                sx(x),
                sy(y),
                s.color
            ));
        }
        let ly = T + 16.0 + 18.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{ly:.2}\" x2=\"{:.2}\" y2=\"{ly:.2}\" stroke=\"{}\" \
             stroke-width=\"2\"/>\n",
            R - 120.0,
            R - 96.0,
            s.color
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#222\">{}</text>\n",
            R - 90.0,
            ly + 4.0,
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn split_series(
    outcomes: &[CellOutcome],
    value: impl Fn(&CellResult) -> Option<f64>,
) -> Vec<Series> {
    let collect = |fin: FinState, label: &'static str, color: &'static str| Series {
        label,
        color,
        points: outcomes
            .iter()
            .filter(|o| o.fin == fin)
            .filter_map(|o| {
                let cell = o.result.as_ref().ok()?;
                Some((o.f_mhz as f64 / 1000.0, value(cell)?))
            })
            .collect(),
    };
    vec![
        collect(FinState::Folded, "folded", FOLDED_COLOR),
        collect(FinState::Erected, "erected", ERECTED_COLOR),
    ]
}

/// Write the metrics table and the five frequency-response charts into
/// `dir` (created if needed). Returns the paths written, table first.
pub fn emit_report(outcomes: &[CellOutcome], dir: &Path) -> Result<Vec<PathBuf>> {
    if outcomes.is_empty() {
        return Err(Error::Argument("no sweep cells to report".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let table = dir.join("metrics.csv");
    write_metrics_csv(outcomes, &table)?;
    written.push(table);

    let charts: [(&str, &str, fn(&CellResult) -> Option<f64>, Option<Band>); 5] = [
        (
            "speed.svg",
            "cruise speed (m/s)",
            |c| Some(c.steady_speed),
            None,
        ),
        (
            "accel.svg",
            "burst acceleration (m/s^2)",
            |c| Some(c.metrics.accel),
            None,
        ),
        (
            "cot.svg",
            "cost of transport",
            |c| Some(c.metrics.cot_total),
            None,
        ),
        (
            "st.svg",
            "Strouhal number",
            |c| Some(c.metrics.strouhal),
            Some(Band {
                lo: 0.25,
                hi: 0.35,
                label: "efficient band",
            }),
        ),
        (
            "re.svg",
            "Reynolds number",
            |c| Some(c.metrics.reynolds),
            None,
        ),
    ];
    for (file, y_label, value, band) in charts {
        let title = match file {
            "speed.svg" => "Cruise speed vs tail-beat frequency",
            "accel.svg" => "Burst acceleration vs tail-beat frequency",
            "cot.svg" => "Cost of transport vs tail-beat frequency",
            "st.svg" => "Strouhal number vs tail-beat frequency",
            _ => "Reynolds number vs tail-beat frequency",
        };
        let svg = svg_chart(title, y_label, &split_series(outcomes, value), band);
        let path = dir.join(file);
        std::fs::write(&path, svg)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::{FreeParameters, PlantConstants};
    use crate::sweep::{run_grid_serial, RunOptions};

    fn outcomes() -> Vec<CellOutcome> {
        let plant = PlantConstants::default();
        let fp = FreeParameters::default();
        let robot = fp.robot_params(&plant);
        let base = fp.base_midline(&plant);
        let opts = RunOptions {
            straight_duration: 12.0,
            turn_duration: 30.0,
            turn_trim: 10.0,
            ..RunOptions::default()
        };
        let mut out = run_grid_serial(
            &robot,
            &base,
            &[2000, 2600],
            &[FinState::Folded, FinState::Erected],
            &opts,
        );
        out.push(CellOutcome {
            f_mhz: 3200,
            fin: FinState::Folded,
            result: Err(Error::Argument("deliberate test failure".into())),
        });
        out
    }

    #[test]
    fn report_files_are_complete_and_byte_stable() {
        let cells = outcomes();
        let dir = tempfile::tempdir().unwrap();
        let first = emit_report(&cells, dir.path()).unwrap();
        assert_eq!(first.len(), 6);
        let names: Vec<_> = first
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(
            names,
            ["metrics.csv", "speed.svg", "accel.svg", "cot.svg", "st.svg", "re.svg"]
        );
        let bytes: Vec<Vec<u8>> = first.iter().map(|p| std::fs::read(p).unwrap()).collect();

        let dir2 = tempfile::tempdir().unwrap();
        let second = emit_report(&cells, dir2.path()).unwrap();
        for (path, expected) in second.iter().zip(&bytes) {
            assert_eq!(&std::fs::read(path).unwrap(), expected);
        }
    }

    #[test]
    fn metrics_table_shape_and_error_rows() {
        let cells = outcomes();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        write_metrics_csv(&cells, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], METRICS_HEADER.replace(' ', ""));
        assert_eq!(lines.len(), 1 + cells.len());
        assert!(lines[1].starts_with("2,folded,"));
        assert!(lines[2].starts_with("2,erected,"));
        assert!(lines[3].starts_with("2.6,folded,"));
        let last = lines.last().unwrap();
        assert!(last.starts_with("3.2,folded,,,,,,,,,,,"));
        assert!(last.contains("error[argument]: deliberate test failure"));

        // Numeric cells carry six decimals.
        let fields: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(fields[2].split('.').nth(1).map(str::len), Some(6));
    }

    #[test]
    fn charts_carry_both_series_and_the_efficiency_band() {
        let cells = outcomes();
        let dir = tempfile::tempdir().unwrap();
        let written = emit_report(&cells, dir.path()).unwrap();
        for path in &written[1..] {
            let svg = std::fs::read_to_string(path).unwrap();
            assert!(svg.starts_with("<svg "));
            assert!(svg.contains("polyline"));
            assert!(svg.contains(FOLDED_COLOR));
            assert!(svg.contains(ERECTED_COLOR));
            assert!(svg.trim_end().ends_with("</svg>"));
        }
        let st = std::fs::read_to_string(&written[4]).unwrap();
        assert!(st.contains("efficient band"));
    }

    #[test]
    fn empty_reports_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            emit_report(&[], dir.path()),
            Err(Error::Argument(_))
        ));
    }
}
