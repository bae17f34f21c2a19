//! Harness-level tests: run execution, sweeps, file outputs, and smoke
//! tests of the `sphere-transport` binary.

use std::path::PathBuf;
use std::process::Command;

use sphere_transport::harness::{
    execute_run, parse_config, run_convergence_sweep, validate_vtk_polydata, PointSource,
};

fn manifest_pairs(kv: &[(&str, &str)]) -> Vec<(String, String)> {
    kv.iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn short_run_writes_snapshots_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let manifest = parse_config(
        None,
        &manifest_pairs(&[
            ("test", "vortex"),
            ("n", "400"),
            ("dt", "0.003"),
            ("t_final", "0.03"),
            ("snapshot_times", "0.0, 0.015, 0.03"),
            ("output_dir", out.to_str().unwrap()),
        ]),
    )
    .unwrap();
    let outcome = execute_run(&manifest).unwrap();
    assert_eq!(outcome.n, 400);
    assert!(outcome.l2_error.is_some());
    assert!(outcome.report.all_converged);

    for step in ["000000", "000005", "000010"] {
        assert!(out.join(format!("snapshot_step{step}.csv")).exists());
    }
    let text = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(text.contains("steps: 10"));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(json["n"], 400);
    assert!(json["l2_error"].as_f64().is_some());
}

#[test]
fn vtk_snapshots_pass_the_grammar_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let manifest = parse_config(
        None,
        &manifest_pairs(&[
            ("test", "vortex"),
            ("n", "400"),
            ("dt", "0.003"),
            ("t_final", "0.015"),
            ("snapshot_times", "0.015"),
            ("snapshot_format", "vtk-legacy"),
            ("output_dir", out.to_str().unwrap()),
        ]),
    )
    .unwrap();
    execute_run(&manifest).unwrap();
    let text = std::fs::read_to_string(out.join("snapshot_step000005.vtk")).unwrap();
    assert_eq!(validate_vtk_polydata(&text), Ok(400));
}

#[test]
fn sweep_produces_rows_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let manifest = parse_config(
        None,
        &manifest_pairs(&[
            ("test", "vortex"),
            ("n", "400"),
            ("dt", "0.003"),
            ("t_final", "0.03"),
            ("output_dir", out.to_str().unwrap()),
        ]),
    )
    .unwrap();
    let table = run_convergence_sweep(&manifest, &[196, 324]);
    assert!(table.all_succeeded());
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.rows[0].n, 196);
    let csv = table.to_csv();
    assert!(csv.starts_with("n,l2_error,relative_l2,iterations,wall_secs"));
    assert_eq!(csv.lines().count(), 3);

    // empty list: empty table, success
    let empty = run_convergence_sweep(&manifest, &[]);
    assert!(empty.all_succeeded());
    assert!(empty.rows.is_empty());

    // per-N failure is logged, table stays partial
    let partial = run_convergence_sweep(&manifest, &[196, 5]);
    assert_eq!(partial.rows.len(), 1);
    assert_eq!(partial.failures.len(), 1);
    assert!(!partial.all_succeeded());
}

#[test]
fn run_from_loaded_point_file() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("nodes.txt");
    let set = sphere_transport::generate_phyllotaxis(400).unwrap();
    sphere_transport::geometry::save_point_set(&set, &pts, sphere_transport::PointFormat::PlainXyz)
        .unwrap();
    let out = dir.path().join("out");
    let manifest = parse_config(
        None,
        &manifest_pairs(&[
            ("test", "vortex"),
            ("points_file", pts.to_str().unwrap()),
            ("dt", "0.003"),
            ("t_final", "0.015"),
            ("output_dir", out.to_str().unwrap()),
        ]),
    )
    .unwrap();
    assert!(matches!(manifest.source, PointSource::File { .. }));
    let outcome = execute_run(&manifest).unwrap();
    assert_eq!(outcome.n, 400);
}

#[test]
fn evaluation_on_separate_point_set() {
    // error measured through off-node evaluation at a loaded set
    let dir = tempfile::tempdir().unwrap();
    let eval = dir.path().join("eval.txt");
    let set = sphere_transport::generate_phyllotaxis(300).unwrap();
    sphere_transport::geometry::save_point_set(
        &set,
        &eval,
        sphere_transport::PointFormat::PlainLonLat,
    )
    .unwrap();
    let out = dir.path().join("out");
    let manifest = parse_config(
        None,
        &manifest_pairs(&[
            ("test", "vortex"),
            ("n", "400"),
            ("dt", "0.003"),
            ("t_final", "0.03"),
            ("eval_points_file", eval.to_str().unwrap()),
            ("eval_points_format", "lonlat"),
            ("output_dir", out.to_str().unwrap()),
        ]),
    )
    .unwrap();
    let outcome = execute_run(&manifest).unwrap();
    let err = outcome.l2_error.unwrap();
    assert!(err.is_finite() && err < 1.0);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sphere-transport"))
}

#[test]
fn binary_gen_points_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pts.txt");
    let status = bin()
        .args(["gen-points", "-n", "64", "--out", path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let ps =
        sphere_transport::load_point_set(&path, sphere_transport::PointFormat::PlainXyz).unwrap();
    assert_eq!(ps.len(), 64);
}

#[test]
fn binary_validate_config_and_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "test = vortex\nn = 400\ndt = 0.003\nt_final = 0.015\noutput_dir = {}\n",
            out.display()
        ),
    )
    .unwrap();

    let status = bin()
        .args(["validate-config", "--config", cfg.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());

    // invalid override: nonzero exit and a machine-readable error line
    let output = bin()
        .args([
            "validate-config",
            "--config",
            cfg.to_str().unwrap(),
            "--set",
            "method=RBF",
        ])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let line = stderr.lines().last().unwrap();
    let json: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(json["status"], "error");

    let output = bin()
        .args(["run", "--config", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("l2_error:"));
    assert!(out.join("report.json").exists());
}

#[test]
fn binary_sweep_emits_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let output = bin()
        .args([
            "sweep",
            "--set",
            "test=vortex",
            "--set",
            "n=100",
            "--set",
            "dt=0.003",
            "--set",
            "t_final=0.015",
            "--set",
            &format!("output_dir={}", out.display()),
            "--n-list",
            "100,196",
        ])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    assert!(out.join("sweep.csv").exists());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.lines().count() >= 3);
}

#[test]
fn output_dir_env_override() {
    let dir = tempfile::tempdir().unwrap();
    let forced = dir.path().join("forced");
    let manifest_path: PathBuf = dir.path().join("run.cfg");
    std::fs::write(
        &manifest_path,
        "test = vortex\nn = 400\ndt = 0.003\nt_final = 0.006\noutput_dir = ignored\n",
    )
    .unwrap();
    let output = bin()
        .env("SPHERE_TRANSPORT_OUTDIR", &forced)
        .args(["run", "--config", manifest_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    assert!(forced.join("report.json").exists());
}
