//! Single-run execution and convergence sweeps over N.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{generate_phyllotaxis, load_point_set, PointSet};
use crate::harness::output::{write_report_files, WrittenReport};
use crate::harness::{PointSource, RunManifest};
use crate::solver::{evaluate_at, run_simulation, RunReport};
use crate::testcases::{l2_error, l2_norm};

/// Result of one benchmark run.
#[derive(Debug)]
pub struct RunOutcome {
    pub n: usize,
    /// l2 error against the exact solution at t = T, when defined.
    pub l2_error: Option<f64>,
    /// Error normalized by the l2 norm of the exact final field.
    pub relative_l2: Option<f64>,
    pub report: RunReport,
}

fn load_points(manifest: &RunManifest) -> Result<PointSet> {
    match &manifest.source {
        PointSource::GeneratePts { n } => generate_phyllotaxis(*n),
        PointSource::File { path, format } => load_point_set(path, *format),
    }
}

/// Execute one run described by the manifest: load or generate nodes, run
/// the time loop, write snapshots and the report, and compute the final
/// error where an exact solution exists.
pub fn execute_run(manifest: &RunManifest) -> Result<RunOutcome> {
    let ps = load_points(manifest)?;
    let n = ps.len();
    let case = manifest.test_case();
    let cfg = manifest.solver_config(n);

    std::fs::create_dir_all(&manifest.output_dir)
        .map_err(|e| Error::io(manifest.output_dir.display().to_string(), e))?;
    let snapshot_format = manifest.snapshot_format;
    let out_dir = manifest.output_dir.clone();
    let ps_for_sink = ps.clone();
    let mut sink = move |state: &crate::solver::SimulationState| -> Result<()> {
        let path = out_dir.join(format!(
            "snapshot_step{:06}.{}",
            state.step_index,
            snapshot_format.extension()
        ));
        crate::harness::emit_snapshot(&ps_for_sink, &state.u_curr, snapshot_format, &path)
    };

    let (u_final, report) =
        run_simulation(&ps, &cfg, &case, &manifest.snapshot_times, &mut sink)?;

    // error at the final time, on the solution nodes or a loaded
    // evaluation set
    let (l2_err, rel_l2) = match &manifest.eval_points {
        None => final_error_at_nodes(&ps, &case, &u_final),
        Some((path, format)) => {
            let targets = load_point_set(path, *format)?;
            match case.exact_at(&targets, case.t_final) {
                Some(exact) => {
                    let numerical = evaluate_at(&ps, &u_final, &targets, &cfg)?;
                    let err = l2_error(&numerical, &exact);
                    let norm = l2_norm(&exact);
                    (Some(err), (norm > 0.0).then(|| err / norm))
                }
                None => (None, None),
            }
        }
    };

    let written = WrittenReport {
        test: manifest.test.to_string(),
        l2_error: l2_err,
        relative_l2_error: rel_l2,
        report: &report,
    };
    write_report_files(&manifest.output_dir, &written)?;

    Ok(RunOutcome {
        n,
        l2_error: l2_err,
        relative_l2: rel_l2,
        report,
    })
}

fn final_error_at_nodes(
    ps: &PointSet,
    case: &crate::testcases::TestCase,
    u_final: &[f64],
) -> (Option<f64>, Option<f64>) {
    match case.exact_at(ps, case.t_final) {
        Some(exact) => {
            let err = l2_error(u_final, &exact);
            let norm = l2_norm(&exact);
            (Some(err), (norm > 0.0).then(|| err / norm))
        }
        None => (None, None),
    }
}

/// One line of a convergence table.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub l2_error: Option<f64>,
    pub relative_l2: Option<f64>,
    pub total_iterations: usize,
    pub wall_secs: f64,
}

/// Convergence table plus any per-N failures.
#[derive(Debug, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub failures: Vec<(usize, String)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,l2_error,relative_l2,iterations,wall_secs\n");
        for row in &self.rows {
            let fmt_opt = |v: Option<f64>| match v {
                Some(x) => format!("{x:.10e}"),
                None => "n/a".to_string(),
            };
            writeln!(
                s,
                "{},{},{},{},{:.6}",
                row.n,
                fmt_opt(row.l2_error),
                fmt_opt(row.relative_l2),
                row.total_iterations,
                row.wall_secs
            )
            .unwrap();
        }
        s
    }

    pub fn all_succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run the manifest once per N in `n_list` with generated PTS nodes of
/// that size. Failures are logged per N and the partial table returned.
pub fn run_convergence_sweep(manifest: &RunManifest, n_list: &[usize]) -> SweepTable {
    let mut table = SweepTable::default();
    for &n in n_list {
        let mut per_n = manifest.clone();
        per_n.source = PointSource::GeneratePts { n };
        per_n.output_dir = manifest.output_dir.join(format!("n{n}"));
        match execute_run(&per_n) {
            Ok(outcome) => table.rows.push(SweepRow {
                n: outcome.n,
                l2_error: outcome.l2_error,
                relative_l2: outcome.relative_l2,
                total_iterations: outcome.report.total_iterations(),
                wall_secs: outcome.report.total_secs,
            }),
            Err(e) => {
                eprintln!("sweep: run at n = {n} failed: {e}");
                table.failures.push((n, e.to_string()));
            }
        }
    }
    table
}

/// Write the sweep table to `dir/sweep.csv`.
pub fn write_sweep_csv(table: &SweepTable, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let path = dir.join("sweep.csv");
    std::fs::write(&path, table.to_csv())
        .map_err(|e| Error::io(path.display().to_string(), e))
}
