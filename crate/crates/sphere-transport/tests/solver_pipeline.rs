//! Integration tests for the assembled solver: stepping behavior,
//! caching, determinism and off-node evaluation.

use approx::assert_abs_diff_eq;

use sphere_transport::geometry::{generate_phyllotaxis, PointSet, SpherePoint};
use sphere_transport::solver::{
    assemble_operators, evaluate_at, run_simulation, step_bdf2, step_first, Method,
    SimulationState, SolverConfig, StepSystem,
};
use sphere_transport::testcases::{l2_error, solid_body_case, vortex_case, TestCase};

fn gmls_cfg(dt: f64) -> SolverConfig {
    SolverConfig::new(Method::Gmls, dt)
}

#[test]
fn zero_initial_condition_stays_zero() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let case = vortex_case();
    let ops = assemble_operators(&ps, &cfg).unwrap();
    let state = SimulationState::initial(vec![0.0; ps.len()]);
    let (next, report) = step_first(&state, &ops, &ps, &case, &cfg).unwrap();
    assert!(report.converged);
    assert!(next.u_curr.iter().all(|&v| v == 0.0));
}

#[test]
fn constants_survive_first_step_and_bdf2() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let case = vortex_case(); // steady, divergence-free velocity
    let ops = assemble_operators(&ps, &cfg).unwrap();

    let state = SimulationState::initial(vec![0.7; ps.len()]);
    let (state, _) = step_first(&state, &ops, &ps, &case, &cfg).unwrap();
    for &v in &state.u_curr {
        assert_abs_diff_eq!(v, 0.7, epsilon = 1e-9);
    }

    // and through 20 BDF2 steps
    let (v1, v2) = case.velocity_at(&ps, 2.0 * cfg.dt);
    let system = StepSystem::build(
        sphere_transport::solver::system_matrix_bdf2(&ops, &v1, &v2, cfg.dt).unwrap(),
    )
    .unwrap();
    let mut state = state;
    for _ in 0..20 {
        let (next, _) = step_bdf2(&state, &ops, &cfg, &system).unwrap();
        state = next;
    }
    for &v in &state.u_curr {
        assert_abs_diff_eq!(v, 0.7, epsilon = 1e-8);
    }
}

#[test]
fn first_step_accuracy_on_vortex() {
    // one backward-Euler step must track the exact solution at t = dt
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let case = vortex_case();
    let ops = assemble_operators(&ps, &cfg).unwrap();
    let state = SimulationState::initial(case.initial_at(&ps));
    let (next, _) = step_first(&state, &ops, &ps, &case, &cfg).unwrap();
    let exact = case.exact_at(&ps, cfg.dt).unwrap();
    assert!(l2_error(&next.u_curr, &exact) < 1e-3);
}

#[test]
fn time_zero_run_returns_initial() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let mut case = vortex_case();
    case.t_final = 0.0;
    let (u, report) = run_simulation(&ps, &cfg, &case, &[], &mut |_| Ok(())).unwrap();
    assert_eq!(report.steps, 0);
    assert_eq!(u, case.initial_at(&ps));
}

#[test]
fn dt_must_divide_final_time() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(0.7); // 3.0 / 0.7 is not an integer
    let case = vortex_case();
    assert!(run_simulation(&ps, &cfg, &case, &[], &mut |_| Ok(())).is_err());
}

#[test]
fn snapshot_times_validated() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let mut case = vortex_case();
    case.t_final = 0.03;
    // not a multiple of dt
    assert!(run_simulation(&ps, &cfg, &case, &[0.004], &mut |_| Ok(())).is_err());
    // outside [0, T]
    assert!(run_simulation(&ps, &cfg, &case, &[0.06], &mut |_| Ok(())).is_err());

    let mut seen = Vec::new();
    let (_, _) = run_simulation(&ps, &cfg, &case, &[0.0, 0.015, 0.03], &mut |s| {
        seen.push(s.step_index);
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, vec![0, 5, 10]);
}

#[test]
fn caching_equivalence_for_steady_velocity() {
    // the same flow declared time-dependent forces a rebuild every step;
    // results must agree with the cached run to near machine precision
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let mut short = vortex_case();
    short.t_final = 3.0 * 30.0 / 1000.0;

    let (cached, _) = run_simulation(&ps, &cfg, &short, &[], &mut |_| Ok(())).unwrap();
    let mut rebuilt_case = short.clone();
    rebuilt_case.time_dependent_velocity = true;
    let (rebuilt, _) = run_simulation(&ps, &cfg, &rebuilt_case, &[], &mut |_| Ok(())).unwrap();
    for (a, b) in cached.iter().zip(&rebuilt) {
        assert_abs_diff_eq!(a, b, epsilon = 1e-13);
    }
}

#[test]
fn runs_are_deterministic() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let mut short = vortex_case();
    short.t_final = 3.0 * 20.0 / 1000.0;
    let (a, _) = run_simulation(&ps, &cfg, &short, &[], &mut |_| Ok(())).unwrap();
    let (b, _) = run_simulation(&ps, &cfg, &short, &[], &mut |_| Ok(())).unwrap();
    assert_eq!(a, b, "identical runs must produce bit-identical output");
}

#[test]
fn assembly_identical_across_thread_counts() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| assemble_operators(&ps, &cfg).unwrap());
    let multi = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| assemble_operators(&ps, &cfg).unwrap());
    assert_eq!(single.a, multi.a);
    assert_eq!(single.b1, multi.b1);
    assert_eq!(single.b2, multi.b2);
}

#[test]
fn preconditioned_iterations_do_not_exceed_plain() {
    // regression check of ILU effectiveness on the assembled transport
    // systems at N = 1600 for both steady test flows
    let ps = generate_phyllotaxis(1600).unwrap();
    for case in [solid_body_case(), vortex_case()] {
        let cfg = gmls_cfg(case.t_final / 1000.0);
        let ops = assemble_operators(&ps, &cfg).unwrap();
        let (v1, v2) = case.velocity_at(&ps, cfg.dt);
        let s = sphere_transport::solver::system_matrix_bdf2(&ops, &v1, &v2, cfg.dt).unwrap();
        let b = case.initial_at(&ps);
        let x0 = vec![0.0; ps.len()];
        let ilu = sphere_transport::sparse::Ilu0Factors::factorize(&s).unwrap();
        let (_, plain) =
            sphere_transport::sparse::bicgstab(&s, &b, &x0, None, 1e-10, 2000).unwrap();
        let (_, pre) =
            sphere_transport::sparse::bicgstab(&s, &b, &x0, Some(&ilu), 1e-10, 2000).unwrap();
        assert!(plain.converged && pre.converged);
        assert!(
            pre.iterations <= plain.iterations,
            "{}: {} preconditioned vs {} plain",
            case.name,
            pre.iterations,
            plain.iterations
        );
    }
}

#[test]
fn off_node_evaluation_reproduces_harmonics() {
    // transfer nodal data to an independent target set through the shape
    // functions of both methods
    let ps = generate_phyllotaxis(1600).unwrap();
    let targets = {
        // rotate a smaller set so targets avoid the solution nodes
        let base = generate_phyllotaxis(200).unwrap();
        let rot: Vec<SpherePoint> = base
            .points()
            .iter()
            .map(|p| {
                let [x, y, z] = p.xyz();
                let (s, c) = 0.4f64.sin_cos();
                SpherePoint::from_xyz([c * x - s * y, s * x + c * y, z]).unwrap()
            })
            .collect();
        PointSet::new(rot, "targets").unwrap()
    };
    let field = |p: &SpherePoint| -> f64 {
        let [x, y, z] = p.xyz();
        0.3 + 1.1 * x - 0.6 * y * z
    };
    let nodal: Vec<f64> = ps.points().iter().map(field).collect();
    for method in [Method::Gmls, Method::Mkls] {
        let cfg = SolverConfig::new(method, 1.0);
        let values = evaluate_at(&ps, &nodal, &targets, &cfg).unwrap();
        for (v, p) in values.iter().zip(targets.points()) {
            assert_abs_diff_eq!(v, &field(p), epsilon = 1e-6);
        }
    }
}

#[test]
fn report_carries_phase_timings_and_iterations() {
    let ps = generate_phyllotaxis(400).unwrap();
    let cfg = gmls_cfg(3.0 / 1000.0);
    let mut short = vortex_case();
    short.t_final = 3.0 * 10.0 / 1000.0;
    let (_, report) = run_simulation(&ps, &cfg, &short, &[], &mut |_| Ok(())).unwrap();
    assert_eq!(report.steps, 10);
    assert_eq!(report.per_step_iterations.len(), 10);
    assert!(report.all_converged);
    assert!(report.assembly_secs > 0.0);
    assert!(report.total_secs >= report.solve_secs);
    // text and JSON forms exist and carry the step count
    assert!(report.to_text().contains("steps: 10"));
    let json = serde_json::to_string(&report).unwrap();
    assert!(json.contains("\"steps\":10"));
}

fn case_with_dt(case: &TestCase, steps: usize) -> (TestCase, f64) {
    (case.clone(), case.t_final / steps as f64)
}

#[test]
fn vortex_error_decreases_with_resolution_short_run() {
    // cheap convergence sanity apart from the acceptance suite: a shorter
    // horizon still shows the spatial ordering between N = 400 and 1600
    let (case, dt) = case_with_dt(&vortex_case(), 1000);
    let mut errors = Vec::new();
    for n in [400usize, 1600] {
        let ps = generate_phyllotaxis(n).unwrap();
        let cfg = gmls_cfg(dt);
        let (u, _) = run_simulation(&ps, &cfg, &case, &[], &mut |_| Ok(())).unwrap();
        let exact = case.exact_at(&ps, case.t_final).unwrap();
        errors.push(l2_error(&u, &exact));
    }
    assert!(errors[1] < errors[0]);
}
