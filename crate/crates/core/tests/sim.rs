use otsplit::models::{DcMotorSpec, UnicycleFormationSpec};
use otsplit::sim::{
    run_closed_loop, run_reference_loop, summarize_window, write_trace_csv, BudgetModel, ClosedLoopModel,
    DcMotorScenario, RunOptions, ToyScenario, UnicycleScenario,
};
use otsplit::{Config, Trace};

fn motor(dt: f64) -> DcMotorScenario<f64> {
    DcMotorScenario::new(DcMotorSpec::new(dt)).unwrap()
}

fn csv_bytes(trace: &Trace) -> Vec<u8> {
    let mut out = Vec::new();
    write_trace_csv(trace, &mut out).unwrap();
    out
}

fn run(model: &dyn ClosedLoopModel<f64>, cfg: &Config, power: f64, opts: &RunOptions<f64>) -> Trace {
    run_closed_loop(model, cfg, &BudgetModel::new(power).unwrap(), opts).map_err(|e| e.error).unwrap()
}

#[test]
fn same_seed_gives_identical_traces_and_csv() {
    let model = motor(0.018);
    let cfg = Config { rho: 100.0, ..Config::default() };
    let opts = RunOptions::new(1.0, 7);
    let a = run(&model, &cfg, 2000.0, &opts);
    let b = run(&model, &cfg, 2000.0, &opts);
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
    let other = run(&model, &cfg, 2000.0, &RunOptions::new(1.0, 8));
    assert_ne!(csv_bytes(&a), csv_bytes(&other));
}

#[test]
fn parallel_groups_do_not_change_the_unicycle_trace() {
    let model = UnicycleScenario::new(UnicycleFormationSpec::new(0.35)).unwrap();
    let cfg = Config { rho: 2000.0, ..Config::default() };
    let opts = RunOptions::new(3.5, 1);
    let seq = run(&model, &cfg, 300.0, &opts);
    let par = run(&model, &Config { parallel: true, ..cfg }, 300.0, &opts);
    assert_eq!(csv_bytes(&seq), csv_bytes(&par));
}

#[test]
fn csv_layout() {
    let model = ToyScenario::new(0.1).unwrap();
    let trace = run(&model, &Config::default(), 100.0, &RunOptions::new(0.5, 3));
    let text = String::from_utf8(csv_bytes(&trace)).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[..2], ["k", "t"]);
    for col in ["omega", "feasG", "auglag", "M_used", "D", "rho", "dt", "seed"] {
        assert!(header.contains(&col), "missing column {col}");
    }
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), trace.rows.len());
    for row in rows {
        assert_eq!(row.split(',').count(), header.len());
    }
}

#[test]
fn budget_accounting_and_trace_completeness() {
    let model = UnicycleScenario::new(UnicycleFormationSpec::new(0.35)).unwrap();
    for stages in [1, 3] {
        let cfg = Config { rho: 2000.0, stages, ..Config::default() };
        let mut opts = RunOptions::new(2.8, 2);
        opts.record_sweeps = true;
        let trace = run(&model, &cfg, 300.0, &opts);
        assert_eq!(trace.meta.sweeps, 105);
        for (k, (row, reports)) in trace.rows.iter().zip(&trace.sweeps).enumerate().skip(1) {
            assert_eq!(row.sweeps_used, 105);
            assert_eq!(reports.len(), 105);
            let calls: usize = reports.iter().map(|r| r.group_calls).sum();
            assert_eq!(calls, 105 * 2, "step {k}");
            assert!(row.omega.is_finite() && row.feasibility.is_finite());
        }
        for pair in trace.rows.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }
}

#[test]
fn each_step_starts_from_the_previous_iterate() {
    let model = motor(0.018);
    let cfg = Config { rho: 100.0, ..Config::default() };
    let mut opts = RunOptions::new(0.5, 4);
    opts.record_sweeps = true;
    opts.record_iterates = true;
    let trace = run(&model, &cfg, 2000.0, &opts);
    let nlp = model.nlp();
    for k in 1..trace.rows.len() {
        let prev = &trace.iterates[k - 1];
        let expect = nlp.aug_lagrangian(&prev.z, &prev.mu, &trace.rows[k].s, cfg.rho).unwrap();
        assert_eq!(trace.sweeps[k][0].value_before, expect, "step {k}");
    }
}

/// The start is a KKT point only to the oracle tolerance: the first step may
/// polish it by that much, after which the input no longer moves.
#[test]
fn unperturbed_start_at_a_constant_parameter_stays_put() {
    let mut model = ToyScenario::new(0.1).unwrap();
    model.rate = 0.0;
    model.s_init = 1.0;
    let mut opts = RunOptions::new(5.0, 0);
    opts.perturbation = 0.0;
    let trace = run(&model, &Config::default(), 360.0, &opts);
    let u0 = &trace.rows[0].u;
    let omega0 = trace.rows[0].omega;
    let moves: Vec<f64> = trace.rows.windows(2).map(|p| otsplit::linalg::dist2(&p[0].u, &p[1].u)).collect();
    for row in &trace.rows {
        for (a, b) in row.u.iter().zip(u0) {
            assert!((a - b).abs() <= opts.oracle_tol, "input left the oracle ball at step {}", row.k);
        }
        assert!(row.omega <= omega0, "step {}: {} > {}", row.k, row.omega, omega0);
    }
    // Any remaining motion dies out geometrically.
    for (k, pair) in moves.windows(2).enumerate() {
        assert!(pair[1] <= 0.1 * pair[0] + 1e-15, "step {}: {:e} after {:e}", k + 2, pair[1], pair[0]);
    }
    assert_eq!(*moves.last().unwrap(), 0.0);
}

#[test]
fn reference_loop_is_accurate_and_self_consistent() {
    let model = motor(0.018);
    let cfg = Config { rho: 100.0, ..Config::default() };
    let reference = run_reference_loop(&model, &cfg, &RunOptions::new(1.0, 1)).map_err(|e| e.error).unwrap();
    assert!(reference.meta.reference);
    for row in &reference.rows {
        assert!(row.omega <= 1e-6 && row.feasibility <= 1e-6, "step {}", row.k);
    }
    let own = summarize_window(&reference, &reference, 0.0, 1.0).unwrap();
    assert_eq!(own.tracking_error, 0.0);
}

#[test]
fn a_huge_budget_reproduces_the_reference_loop() {
    // Toy path: the single dual update per step lags the moving optimum by
    // O(Δμ*/ρ), well inside the tolerance.
    let model = ToyScenario::new(0.1).unwrap();
    let cfg = Config { rho: 100.0, ..Config::default() };
    let mut opts = RunOptions::new(5.0, 9);
    opts.perturbation = 0.0;
    let tracking = run(&model, &cfg, 1e5, &opts);
    let reference = run_reference_loop(&model, &cfg, &opts).map_err(|e| e.error).unwrap();
    for (a, b) in tracking.rows.iter().zip(&reference.rows) {
        assert!((a.y - b.y).abs() <= 1e-4, "step {}: {} vs {}", a.k, a.y, b.y);
    }
}

/// The residual follows a moving optimum, so single samples jitter; the
/// check is on its envelope: the peak over each 20-step window is at most
/// 1.5× the peak over the window before it, away from reference switches.
#[test]
fn motor_residual_envelope_settles_between_switches() {
    let model = motor(0.018);
    let cfg = Config { rho: 100.0, ..Config::default() };
    let trace = run(&model, &cfg, 2000.0, &RunOptions::new(6.0, 1));
    let switches = [2.0, 4.0];
    let omega: Vec<f64> = trace.rows.iter().map(|r| r.omega).collect();
    let peak = |a: usize| omega[a..a + 20].iter().copied().fold(0.0, f64::max);
    let mut checked = 0;
    for i in 0..omega.len().saturating_sub(40) {
        let (t0, t1) = (trace.rows[i].t, trace.rows[i + 39].t);
        if switches.iter().any(|&sw| t0 <= sw + 1e-9 && sw <= t1 + 1e-9) {
            continue;
        }
        let (before, after) = (peak(i), peak(i + 20));
        assert!(after <= 1.5 * before, "envelope rose over [{t0}, {t1}]: {before:e} → {after:e}");
        checked += 1;
    }
    assert!(checked > 150, "{checked}");
}

#[test]
fn invalid_run_options_are_rejected() {
    let model = ToyScenario::new(0.1).unwrap();
    let budget = BudgetModel::new(100.0).unwrap();
    let err = run_closed_loop(&model, &Config::default(), &budget, &RunOptions::new(0.0, 0)).unwrap_err();
    assert!(err.to_string().contains("duration"), "{err}");
    assert!(err.trace.rows.is_empty());
    assert!(BudgetModel::<f64>::new(0.0).is_err());
}
