//! Snapshot and report emission: per-node CSV, legacy-VTK point data and
//! the run report in text and JSON form.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointSet;
use crate::solver::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnapshotFormat {
    Csv,
    VtkLegacy,
}

impl SnapshotFormat {
    pub fn extension(self) -> &'static str {
        match self {
            SnapshotFormat::Csv => "csv",
            SnapshotFormat::VtkLegacy => "vtk",
        }
    }
}

/// Write per-node values: CSV rows `lambda,theta,u` at 17 significant
/// digits, or legacy-VTK POLYDATA points with a scalar field `u`.
pub fn emit_snapshot(
    ps: &PointSet,
    values: &[f64],
    format: SnapshotFormat,
    path: &Path,
) -> Result<()> {
    if values.len() != ps.len() {
        return Err(Error::DimensionMismatch {
            context: "snapshot values",
            expected: ps.len(),
            got: values.len(),
        });
    }
    let text = match format {
        SnapshotFormat::Csv => {
            let mut s = String::with_capacity(values.len() * 72 + 16);
            s.push_str("lambda,theta,u\n");
            for (p, u) in ps.points().iter().zip(values) {
                writeln!(s, "{:.16e},{:.16e},{:.16e}", p.lambda(), p.theta(), u).unwrap();
            }
            s
        }
        SnapshotFormat::VtkLegacy => {
            let n = ps.len();
            let mut s = String::with_capacity(n * 80 + 256);
            s.push_str("# vtk DataFile Version 3.0\n");
            s.push_str("sphere-transport snapshot\n");
            s.push_str("ASCII\n");
            s.push_str("DATASET POLYDATA\n");
            writeln!(s, "POINTS {n} double").unwrap();
            for p in ps.points() {
                let [x, y, z] = p.xyz();
                writeln!(s, "{x:.16e} {y:.16e} {z:.16e}").unwrap();
            }
            writeln!(s, "POINT_DATA {n}").unwrap();
            s.push_str("SCALARS u double 1\n");
            s.push_str("LOOKUP_TABLE default\n");
            for u in values {
                writeln!(s, "{u:.16e}").unwrap();
            }
            s
        }
    };
    fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Check the header grammar and point/value counts of a legacy-VTK
/// POLYDATA file produced by [`emit_snapshot`].
pub fn validate_vtk_polydata(text: &str) -> std::result::Result<usize, String> {
    let mut lines = text.lines();
    let mut expect = |want: &str| -> std::result::Result<(), String> {
        match lines.next() {
            Some(l) if l.trim() == want => Ok(()),
            Some(l) => Err(format!("expected `{want}`, found `{l}`")),
            None => Err(format!("missing `{want}`")),
        }
    };
    expect("# vtk DataFile Version 3.0")?;
    let _title = lines.next().ok_or("missing title line")?;
    let mut lines = text.lines().skip(2);
    match lines.next() {
        Some("ASCII") => {}
        other => return Err(format!("expected ASCII, found {other:?}")),
    }
    match lines.next() {
        Some("DATASET POLYDATA") => {}
        other => return Err(format!("expected DATASET POLYDATA, found {other:?}")),
    }
    let points_line = lines.next().ok_or("missing POINTS line")?;
    let mut parts = points_line.split_whitespace();
    if parts.next() != Some("POINTS") {
        return Err(format!("expected POINTS, found `{points_line}`"));
    }
    let n: usize = parts
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or("POINTS count missing")?;
    if parts.next() != Some("double") {
        return Err("POINTS type must be double".to_string());
    }
    for i in 0..n {
        let line = lines.next().ok_or(format!("missing point {i}"))?;
        if line.split_whitespace().count() != 3 {
            return Err(format!("point row {i} does not have 3 columns"));
        }
    }
    let pd = lines.next().ok_or("missing POINT_DATA")?;
    if pd.trim() != format!("POINT_DATA {n}") {
        return Err(format!("expected POINT_DATA {n}, found `{pd}`"));
    }
    match lines.next() {
        Some(l) if l.trim() == "SCALARS u double 1" => {}
        other => return Err(format!("expected SCALARS u double 1, found {other:?}")),
    }
    match lines.next() {
        Some(l) if l.trim() == "LOOKUP_TABLE default" => {}
        other => return Err(format!("expected LOOKUP_TABLE default, found {other:?}")),
    }
    let mut count = 0;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        if line.trim().parse::<f64>().is_err() {
            return Err(format!("bad scalar row `{line}`"));
        }
        count += 1;
    }
    if count != n {
        return Err(format!("expected {n} scalars, found {count}"));
    }
    Ok(n)
}

/// Run summary written next to the snapshots: errors are optional because
/// some flows have no exact solution at arbitrary times.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WrittenReport<'a> {
    pub test: String,
    pub l2_error: Option<f64>,
    pub relative_l2_error: Option<f64>,
    #[serde(flatten)]
    pub report: &'a RunReport,
}

pub(crate) fn write_report_files(
    dir: &Path,
    written: &WrittenReport<'_>,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let mut text = String::new();
    writeln!(text, "test: {}", written.test).unwrap();
    match written.l2_error {
        Some(e) => writeln!(text, "l2_error: {e:.6e}").unwrap(),
        None => writeln!(text, "l2_error: n/a").unwrap(),
    }
    match written.relative_l2_error {
        Some(e) => writeln!(text, "relative_l2_error: {e:.6e}").unwrap(),
        None => writeln!(text, "relative_l2_error: n/a").unwrap(),
    }
    text.push_str(&written.report.to_text());
    let txt_path = dir.join("report.txt");
    fs::write(&txt_path, text).map_err(|e| Error::io(txt_path.display().to_string(), e))?;

    let json_path = dir.join("report.json");
    let json = serde_json::to_string(written)
        .map_err(|e| Error::config("report", format!("serialization failed: {e}")))?;
    fs::write(&json_path, json).map_err(|e| Error::io(json_path.display().to_string(), e))
}
