//! BDF1/BDF2 time stepping with per-step preconditioned solves
//! (Algorithm 2 of the scheme).
//!
//! The first step solves S1 u^1 = A u^0 with S1 = A + dt (v.B); every
//! later step solves S u^{n+1} = A (4 u^n - u^{n-1}) with S = 3A + 2dt
//! (v.B). For steady velocity fields the BDF2 matrix and its ILU(0)
//! factors are built once and reused; time-dependent fields rebuild them
//! each step.

use std::collections::HashSet;
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{CapGrid, PointSet};
use crate::sparse::{bicgstab, Ilu0Factors, SparseMatrix};
use crate::solver::{
    assemble_operators, system_matrix_bdf1, system_matrix_bdf2, DiscreteOperators, RowBuilder,
    SolverConfig,
};
use crate::testcases::TestCase;

/// Nodal solution at two consecutive time levels.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub u_prev: Vec<f64>,
    pub u_curr: Vec<f64>,
    pub step_index: usize,
    pub time: f64,
}

impl SimulationState {
    pub fn initial(u0: Vec<f64>) -> Self {
        SimulationState {
            u_prev: u0.clone(),
            u_curr: u0,
            step_index: 0,
            time: 0.0,
        }
    }
}

/// A time-step system matrix with its preconditioner.
pub struct StepSystem {
    pub matrix: SparseMatrix,
    pub ilu: Ilu0Factors,
}

impl StepSystem {
    pub fn build(matrix: SparseMatrix) -> Result<Self> {
        let ilu = Ilu0Factors::factorize(&matrix)?;
        Ok(StepSystem { matrix, ilu })
    }
}

/// Timing and solver summary of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub n: usize,
    pub method: String,
    pub dt: f64,
    pub t_final: f64,
    pub steps: usize,
    pub assembly_secs: f64,
    pub factorization_secs: f64,
    pub solve_secs: f64,
    pub total_secs: f64,
    pub per_step_iterations: Vec<usize>,
    pub all_converged: bool,
    /// Max |u| at t = 0 and t = T; reported so growth in long runs is
    /// visible rather than silently absorbed.
    pub initial_max_abs: f64,
    pub final_max_abs: f64,
}

impl RunReport {
    pub fn total_iterations(&self) -> usize {
        self.per_step_iterations.iter().sum()
    }

    /// Flat `key: value` text form.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        use std::fmt::Write as _;
        writeln!(s, "n: {}", self.n).unwrap();
        writeln!(s, "method: {}", self.method).unwrap();
        writeln!(s, "dt: {:.12e}", self.dt).unwrap();
        writeln!(s, "t_final: {:.12e}", self.t_final).unwrap();
        writeln!(s, "steps: {}", self.steps).unwrap();
        writeln!(s, "assembly_secs: {:.6}", self.assembly_secs).unwrap();
        writeln!(s, "factorization_secs: {:.6}", self.factorization_secs).unwrap();
        writeln!(s, "solve_secs: {:.6}", self.solve_secs).unwrap();
        writeln!(s, "total_secs: {:.6}", self.total_secs).unwrap();
        writeln!(s, "total_iterations: {}", self.total_iterations()).unwrap();
        writeln!(s, "all_converged: {}", self.all_converged).unwrap();
        writeln!(s, "initial_max_abs: {:.6e}", self.initial_max_abs).unwrap();
        writeln!(s, "final_max_abs: {:.6e}", self.final_max_abs).unwrap();
        s
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// One backward-Euler step from u^0 to u^1: S1 u^1 = A u^0. The velocity
/// is sampled at t = dt over the nodes of `ps`.
pub fn step_first(
    state: &SimulationState,
    ops: &DiscreteOperators,
    ps: &PointSet,
    case: &TestCase,
    cfg: &SolverConfig,
) -> Result<(SimulationState, crate::sparse::SolveReport)> {
    debug_assert_eq!(state.step_index, 0);
    let (v1, v2) = case.velocity_at(ps, cfg.dt);
    let system = StepSystem::build(system_matrix_bdf1(ops, &v1, &v2, cfg.dt)?)?;
    let rhs = ops.a.spmv(&state.u_curr)?;
    let (u1, report) = bicgstab(
        &system.matrix,
        &rhs,
        &state.u_curr,
        Some(&system.ilu),
        cfg.rel_tol,
        cfg.max_iter,
    )?;
    if !report.converged {
        return Err(Error::from_report(1, cfg.dt, &report));
    }
    Ok((
        SimulationState {
            u_prev: state.u_curr.clone(),
            u_curr: u1,
            step_index: 1,
            time: cfg.dt,
        },
        report,
    ))
}

/// One BDF2 step; `system` must hold the factorized matrix for the target
/// time level.
pub fn step_bdf2(
    state: &SimulationState,
    ops: &DiscreteOperators,
    cfg: &SolverConfig,
    system: &StepSystem,
) -> Result<(SimulationState, crate::sparse::SolveReport)> {
    debug_assert!(state.step_index >= 1);
    let n = state.u_curr.len();
    let mut combo = vec![0.0; n];
    for i in 0..n {
        combo[i] = 4.0 * state.u_curr[i] - state.u_prev[i];
    }
    let rhs = ops.a.spmv(&combo)?;
    let next_step = state.step_index + 1;
    let next_time = next_step as f64 * cfg.dt;
    let (u_next, report) = bicgstab(
        &system.matrix,
        &rhs,
        &state.u_curr,
        Some(&system.ilu),
        cfg.rel_tol,
        cfg.max_iter,
    )?;
    if !report.converged {
        return Err(Error::from_report(next_step, next_time, &report));
    }
    Ok((
        SimulationState {
            u_prev: state.u_curr.clone(),
            u_curr: u_next,
            step_index: next_step,
            time: next_time,
        },
        report,
    ))
}

/// Map requested snapshot times onto step indices, validating that each
/// lies in [0, T] on the time grid.
fn snapshot_steps(times: &[f64], dt: f64, t_final: f64, total_steps: usize) -> Result<HashSet<usize>> {
    let mut steps = HashSet::new();
    for &t in times {
        if t < 0.0 || t > t_final * (1.0 + 1e-12) {
            return Err(Error::config(
                "snapshot_times",
                format!("snapshot time {t} outside [0, {t_final}]"),
            ));
        }
        let ratio = t / dt;
        let step = ratio.round();
        if (ratio - step).abs() > 1e-8 * (1.0 + ratio.abs()) {
            return Err(Error::config(
                "snapshot_times",
                format!("snapshot time {t} is not a multiple of dt = {dt}"),
            ));
        }
        let step = step as usize;
        if step > total_steps {
            return Err(Error::config(
                "snapshot_times",
                format!("snapshot time {t} beyond the final step"),
            ));
        }
        steps.insert(step);
    }
    Ok(steps)
}

/// Run the full scheme: assemble, one BDF1 step, BDF2 to T, invoking
/// `sink` at the requested snapshot times. Returns the final nodal values
/// and the run report.
pub fn run_simulation(
    ps: &PointSet,
    cfg: &SolverConfig,
    case: &TestCase,
    snapshot_times: &[f64],
    sink: &mut dyn FnMut(&SimulationState) -> Result<()>,
) -> Result<(Vec<f64>, RunReport)> {
    cfg.validate()?;
    let t_total = Instant::now();

    let ratio = case.t_final / cfg.dt;
    let steps_f = ratio.round();
    if (ratio - steps_f).abs() > 1e-8 * steps_f.max(1.0) {
        return Err(Error::config(
            "dt",
            format!(
                "final time {} is not an integer multiple of dt = {}",
                case.t_final, cfg.dt
            ),
        ));
    }
    let total_steps = steps_f as usize;
    let snapshots = snapshot_steps(snapshot_times, cfg.dt, case.t_final, total_steps)?;

    let t_assembly = Instant::now();
    let ops = assemble_operators(ps, cfg)?;
    let assembly_secs = t_assembly.elapsed().as_secs_f64();

    let u0 = case.initial_at(ps);
    let initial_max_abs = max_abs(&u0);
    let mut state = SimulationState::initial(u0);
    let mut factorization_secs = 0.0;
    let mut solve_secs = 0.0;
    let mut per_step_iterations = Vec::with_capacity(total_steps);

    if snapshots.contains(&0) {
        sink(&state)?;
    }

    if total_steps >= 1 {
        // first step: backward Euler, composed of substeps so the
        // first-order starter does not dominate the O(dt^2) error budget
        let substeps = cfg.first_step_substeps;
        let sub_dt = cfg.dt / substeps as f64;
        let mut u = state.u_curr.clone();
        let mut first_step_iterations = 0;
        let mut cached_sub: Option<StepSystem> = None;
        for k in 1..=substeps {
            let t = k as f64 * sub_dt;
            if cached_sub.is_none() || case.time_dependent_velocity {
                let (v1, v2) = case.velocity_at(ps, t);
                let t_f = Instant::now();
                cached_sub = Some(StepSystem::build(system_matrix_bdf1(
                    &ops, &v1, &v2, sub_dt,
                )?)?);
                factorization_secs += t_f.elapsed().as_secs_f64();
            }
            let system = cached_sub.as_ref().unwrap();
            let rhs = ops.a.spmv(&u)?;
            let t_s = Instant::now();
            let (next, report) = bicgstab(
                &system.matrix,
                &rhs,
                &u,
                Some(&system.ilu),
                cfg.rel_tol,
                cfg.max_iter,
            )?;
            solve_secs += t_s.elapsed().as_secs_f64();
            if !report.converged {
                return Err(Error::from_report(1, t, &report));
            }
            first_step_iterations += report.iterations;
            u = next;
        }
        per_step_iterations.push(first_step_iterations);
        state = SimulationState {
            u_prev: std::mem::take(&mut state.u_curr),
            u_curr: u,
            step_index: 1,
            time: cfg.dt,
        };
        if snapshots.contains(&1) {
            sink(&state)?;
        }

        // BDF2 sweep; cache the system when the velocity is steady
        let mut cached: Option<StepSystem> = None;
        while state.step_index < total_steps {
            let next_time = (state.step_index + 1) as f64 * cfg.dt;
            let system = if case.time_dependent_velocity {
                let (v1, v2) = case.velocity_at(ps, next_time);
                let t_f = Instant::now();
                let s = StepSystem::build(system_matrix_bdf2(&ops, &v1, &v2, cfg.dt)?)?;
                factorization_secs += t_f.elapsed().as_secs_f64();
                cached = Some(s);
                cached.as_ref().unwrap()
            } else {
                if cached.is_none() {
                    let (v1, v2) = case.velocity_at(ps, next_time);
                    let t_f = Instant::now();
                    cached =
                        Some(StepSystem::build(system_matrix_bdf2(&ops, &v1, &v2, cfg.dt)?)?);
                    factorization_secs += t_f.elapsed().as_secs_f64();
                }
                cached.as_ref().unwrap()
            };
            let t_s = Instant::now();
            let (next, report) = step_bdf2(&state, &ops, cfg, system)?;
            solve_secs += t_s.elapsed().as_secs_f64();
            per_step_iterations.push(report.iterations);
            state = next;
            if snapshots.contains(&state.step_index) {
                sink(&state)?;
            }
        }
    }

    let final_max_abs = max_abs(&state.u_curr);
    let report = RunReport {
        n: ps.len(),
        method: cfg.method.to_string(),
        dt: cfg.dt,
        t_final: case.t_final,
        steps: total_steps,
        assembly_secs,
        factorization_secs,
        solve_secs,
        total_secs: t_total.elapsed().as_secs_f64(),
        per_step_iterations,
        all_converged: true,
        initial_max_abs,
        final_max_abs,
    };
    Ok((state.u_curr, report))
}

/// Evaluate a nodal field at arbitrary points through the active method's
/// shape functions (used for t-design evaluation sets).
pub fn evaluate_at(
    ps: &PointSet,
    nodal: &[f64],
    targets: &PointSet,
    cfg: &SolverConfig,
) -> Result<Vec<f64>> {
    if nodal.len() != ps.len() {
        return Err(Error::DimensionMismatch {
            context: "evaluate_at nodal values",
            expected: ps.len(),
            got: nodal.len(),
        });
    }
    cfg.validate()?;
    let h = ps.fill_distance();
    let delta = cfg.delta_multiplier * h;
    let builder = RowBuilder::from_config(cfg, h)?;
    let grid = CapGrid::new(ps, delta)?;
    let need = cfg.min_stencil();
    targets
        .points()
        .iter()
        .map(|x| {
            let indices = grid.indices_around(x);
            if indices.len() < need {
                return Err(Error::StencilDeficiency {
                    node: None,
                    lambda: x.lambda(),
                    theta: x.theta(),
                    got: indices.len(),
                    need,
                });
            }
            let a = builder.shape_functions(x, &indices, ps)?;
            Ok(a.iter().zip(&indices).map(|(&aj, &j)| aj * nodal[j]).sum())
        })
        .collect()
}
