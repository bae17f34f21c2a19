//! Thin command-line front-end over the library harness.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sphere_transport::geometry::{generate_phyllotaxis, save_point_set, PointFormat};
use sphere_transport::harness::{
    execute_run, parse_config, run_convergence_sweep, write_sweep_csv, RunManifest,
};

#[derive(Parser)]
#[command(
    name = "sphere-transport",
    about = "Meshless GMLS/MKLS transport solver on the unit sphere",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a single run described by a config file and/or overrides.
    Run {
        /// Flat `key = value` configuration file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override or supply a key, e.g. `--set test=vortex`; flags win
        /// over the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
    /// Run a convergence sweep over several point counts.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Comma-separated list of N values, e.g. `400,1600,6400`.
        #[arg(long = "n-list", value_delimiter = ',')]
        n_list: Vec<usize>,
    },
    /// Generate a phyllotaxis point set and write it to a file.
    GenPoints {
        #[arg(long, short = 'n')]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// `xyz` (3 columns) or `lonlat` (2 columns, radians).
        #[arg(long, default_value = "xyz")]
        format: String,
    },
    /// Parse and validate a configuration, printing the resolved manifest.
    ValidateConfig {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
    },
}

fn split_overrides(sets: &[String]) -> Result<Vec<(String, String)>, String> {
    sets.iter()
        .map(|s| {
            s.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| format!("--set expects KEY=VALUE, got `{s}`"))
        })
        .collect()
}

fn load_manifest(
    config: Option<&PathBuf>,
    sets: &[String],
) -> Result<RunManifest, String> {
    let overrides = split_overrides(sets)?;
    parse_config(config.map(|p| p.as_path()), &overrides).map_err(|e| e.to_string())
}

fn fail(kind: &str, message: String) -> ExitCode {
    // machine-readable failure summary on stderr
    eprintln!(
        "{}",
        serde_json::json!({ "status": "error", "kind": kind, "message": message })
    );
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, sets } => {
            let manifest = match load_manifest(config.as_ref(), &sets) {
                Ok(m) => m,
                Err(e) => return fail("config", e),
            };
            match execute_run(&manifest) {
                Ok(outcome) => {
                    println!("n: {}", outcome.n);
                    match outcome.l2_error {
                        Some(e) => println!("l2_error: {e:.6e}"),
                        None => println!("l2_error: n/a"),
                    }
                    match outcome.relative_l2 {
                        Some(e) => println!("relative_l2_error: {e:.6e}"),
                        None => println!("relative_l2_error: n/a"),
                    }
                    print!("{}", outcome.report.to_text());
                    println!("output_dir: {}", manifest.output_dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail("run", e.to_string()),
            }
        }
        Command::Sweep {
            config,
            sets,
            n_list,
        } => {
            let manifest = match load_manifest(config.as_ref(), &sets) {
                Ok(m) => m,
                Err(e) => return fail("config", e),
            };
            let table = run_convergence_sweep(&manifest, &n_list);
            if let Err(e) = write_sweep_csv(&table, &manifest.output_dir) {
                return fail("io", e.to_string());
            }
            print!("{}", table.to_csv());
            if table.all_succeeded() {
                ExitCode::SUCCESS
            } else {
                let failures: Vec<_> = table
                    .failures
                    .iter()
                    .map(|(n, msg)| serde_json::json!({ "n": n, "message": msg }))
                    .collect();
                eprintln!(
                    "{}",
                    serde_json::json!({ "status": "error", "kind": "sweep", "failures": failures })
                );
                ExitCode::FAILURE
            }
        }
        Command::GenPoints { n, out, format } => {
            let format = match format.as_str() {
                "xyz" => PointFormat::PlainXyz,
                "lonlat" => PointFormat::PlainLonLat,
                other => {
                    return fail(
                        "config",
                        format!("unknown format `{other}`; valid: xyz, lonlat"),
                    )
                }
            };
            match generate_phyllotaxis(n).and_then(|ps| save_point_set(&ps, &out, format)) {
                Ok(()) => {
                    println!("wrote {} points to {}", n, out.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail("gen-points", e.to_string()),
            }
        }
        Command::ValidateConfig { config, sets } => match load_manifest(config.as_ref(), &sets)
        {
            Ok(m) => {
                println!("ok: {m:#?}");
                ExitCode::SUCCESS
            }
            Err(e) => fail("config", e),
        },
    }
}
