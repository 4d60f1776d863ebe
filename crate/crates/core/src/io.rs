//! CSV and JSON writers for runs, sweeps and tables.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::phase_space::WignerField;
use crate::sweep::SweepResult;
use crate::tables::TablesReport;

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Numerical(format!("csv encoding failed: {other:?}")),
    }
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    csv::Writer::from_path(path).map_err(csv_error)
}

fn write_rows<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = writer(path)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// `epsilon,metric,value,runtime_s`; runtime is empty unless timings were recorded.
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        epsilon: f64,
        metric: &'a str,
        value: f64,
        runtime_s: Option<f64>,
    }
    write_rows(
        path,
        result.rows.iter().map(|r| Row {
            epsilon: r.epsilon,
            metric: r.metric.as_str(),
            value: r.value,
            runtime_s: r.runtime_s,
        }),
    )
}

/// `t,mass,energy,kinetic,potential`, one row per stored frame.
pub fn write_conserved_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    write_rows(path, &traj.conserved)
}

/// Stored frames as `t,x[,y],re,im`.
pub fn write_frames_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut w = writer(path)?;
    let dim = traj.grid().dim();
    let mut header = vec!["t", "x"];
    if dim == 2 {
        header.push("y");
    }
    header.extend(["re", "im"]);
    w.write_record(&header).map_err(csv_error)?;
    for (t, frame) in traj.times.iter().zip(&traj.frames) {
        for (pos, v) in frame.grid().positions().zip(frame.values()) {
            let mut rec = vec![t.to_string(), pos[0].to_string()];
            if dim == 2 {
                rec.push(pos[1].to_string());
            }
            rec.push(v.re.to_string());
            rec.push(v.im.to_string());
            w.write_record(&rec).map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Wigner raster as `x,k,value` (real part; the imaginary part is round-off).
pub fn write_wigner_csv(path: &Path, w: &WignerField) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        x: f64,
        k: f64,
        value: f64,
    }
    let f = &w.function;
    write_rows(
        path,
        (0..f.grid().len()).map(|i| {
            let (x, k) = f.grid().point(i);
            Row {
                x,
                k,
                value: f.values()[i].re,
            }
        }),
    )
}

/// `table,row,cell,predicted_exponent,fitted_exponent,pass`.
pub fn write_tables_csv(path: &Path, report: &TablesReport) -> Result<()> {
    #[derive(Serialize)]
    struct Row<'a> {
        table: u32,
        row: usize,
        cell: &'a str,
        predicted_exponent: f64,
        fitted_exponent: f64,
        pass: bool,
    }
    write_rows(
        path,
        report.cells.iter().map(|c| Row {
            table: c.table,
            row: c.row,
            cell: &c.cell,
            predicted_exponent: c.predicted_exponent,
            fitted_exponent: c.fitted_exponent,
            pass: c.pass,
        }),
    )
}

/// Pretty JSON; non-finite floats become `null`.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Numerical(format!("json encoding failed: {e}")))?;
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

/// Fits and verdicts of a sweep, without the per-point rows.
#[derive(Serialize)]
pub struct SweepSummary<'a> {
    pub config: String,
    pub points: &'a [crate::sweep::PointReport],
    pub fits: &'a std::collections::BTreeMap<crate::config::Metric, crate::fit::DecayFit>,
    pub verdicts: &'a [crate::sweep::Verdict],
    pub all_pass: bool,
}

pub fn sweep_summary(result: &SweepResult) -> SweepSummary<'_> {
    SweepSummary {
        config: result.config.to_config_string(),
        points: &result.points,
        fits: &result.fits,
        verdicts: &result.verdicts,
        all_pass: result.all_pass(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Metric, RegimeConfig};
    use crate::dynamics::{solve, BSchedule, NLSParams, SolveOptions};
    use crate::grid::make_grid;
    use crate::initial_data::{synthesize, Envelope, WavepacketSpec};
    use crate::sweep::{epsilon_sweep, SweepOptions};

    fn coherent() -> WavepacketSpec {
        WavepacketSpec::coherent_state(Envelope::Gaussian, 1.0, vec![0.0], vec![0.0])
    }

    #[test]
    fn sweep_csv_has_the_documented_header() {
        let cfg = RegimeConfig::new(
            1,
            1.0,
            BSchedule::new(1.0, 3.0, false).unwrap(),
            vec![0.2, 0.1, 0.05, 0.025],
            coherent(),
        )
        .with_metrics(&[Metric::TransportMismatchS0]);
        let result = epsilon_sweep(&cfg, &SweepOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run/sweep.csv");
        write_sweep_csv(&path, &result).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("epsilon,metric,value,runtime_s"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("0.2,transport_mismatch_s0,"), "{first}");
        assert!(first.ends_with(','), "{first}");
        assert_eq!(text.lines().count(), 5);

        let json = dir.path().join("summary.json");
        write_json(&json, &sweep_summary(&result)).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(parsed["all_pass"], serde_json::Value::Bool(true));
    }

    #[test]
    fn conserved_and_frames_csv() {
        let g = make_grid(1, 256, 4.0).unwrap();
        let f = synthesize(&coherent(), 0.2, &g).unwrap();
        let traj = solve(
            &NLSParams::new(0.2, 1.0, 0.04).unwrap(),
            &f,
            0.1,
            &SolveOptions::default(),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let c = dir.path().join("conserved.csv");
        write_conserved_csv(&c, &traj).unwrap();
        let text = fs::read_to_string(&c).unwrap();
        assert_eq!(text.lines().next(), Some("t,mass,energy,kinetic,potential"));
        assert_eq!(text.lines().count(), traj.conserved.len() + 1);

        let fr = dir.path().join("frames.csv");
        write_frames_csv(&fr, &traj).unwrap();
        let text = fs::read_to_string(&fr).unwrap();
        assert_eq!(text.lines().next(), Some("t,x,re,im"));
        assert_eq!(text.lines().count(), traj.frames.len() * 256 + 1);
    }
}
