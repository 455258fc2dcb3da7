mod common;

use common::{dense_solve, random_in_box, random_vec, rng, scalar_program};
use otsplit::diagnostics::{feasibility_norm, kkt_residual};
use otsplit::linalg::DenseMatrix;
use otsplit::models::{build_dc_motor_nlp, dc_motor_equilibrium, dc_motor_rollout, toy_qp, toy_qp_solution, DcMotorSpec};
use otsplit::solver::{certificate_defect, relative_error_residual, StageReport};
use otsplit::{
    bck_min, dual_update, equality_fn, full_solve, primal_sweeps, smooth_fn, Block, BlockNlp, BoxSet, Config,
    CurvatureMemory, Error, Iterate, Nlp, SplittingSolver,
};

fn one_dim_cfg(c_init: f64) -> Config {
    Config {
        rho: 1.0,
        alpha: vec![1e-6],
        beta: 2.0,
        c_init,
        ..Config::default()
    }
}

#[test]
fn bck_min_interior_critical_point_is_fixed() {
    let nlp = scalar_program(|z| (z - 0.5) * (z - 0.5), |z| 2.0 * (z - 0.5), 0.0, 1.0);
    for c0 in [0.1, 1.0, 37.0] {
        let mut c = c0;
        let step = bck_min(&nlp, 0, &[0.5], &[], &[0.0], &one_dim_cfg(c0), &mut c).unwrap();
        assert_eq!(step.z_block, vec![0.5]);
        assert_eq!(c, c0);
    }
}

#[test]
fn bck_min_accepts_first_candidate() {
    let nlp = scalar_program(|z| z * z, |z| 2.0 * z, -1.0, 1.0);
    let mut c = 10.0;
    let step = bck_min(&nlp, 0, &[1.0], &[], &[0.0], &one_dim_cfg(10.0), &mut c).unwrap();
    assert_eq!(step.z_block, vec![0.8]);
    assert_eq!((c, step.backtracks), (10.0, 0));
}

#[test]
fn bck_min_backtracks_to_four() {
    let nlp = scalar_program(|z| z * z, |z| 2.0 * z, -1.0, 1.0);
    let mut c = 0.5;
    let step = bck_min(&nlp, 0, &[1.0], &[], &[0.0], &one_dim_cfg(0.5), &mut c).unwrap();
    assert_eq!(step.z_block, vec![0.5]);
    assert_eq!((c, step.curvature, step.backtracks), (4.0, 4.0, 3));
}

#[test]
fn bck_min_reports_curvature_overflow() {
    // A gradient that lies about the function can never pass the test.
    let nlp = scalar_program(|z| z * z, |_| -1.0, -1.0, 1.0);
    let cfg = Config {
        c_max: 1e3,
        ..one_dim_cfg(1.0)
    };
    let mut c = 1.0;
    let err = bck_min(&nlp, 0, &[0.0], &[], &[0.0], &cfg, &mut c).unwrap_err();
    assert!(matches!(err, Error::CurvatureOverflow { block: 0, .. }), "{err}");
}

#[test]
fn zero_sweeps_return_the_start() {
    let nlp = toy_qp::<f64>().unwrap();
    let cfg = Config { sweeps: 0, ..Config::default() };
    let (z, reports) = primal_sweeps(&nlp, &[0.3, -0.2], &[0.7], &[1.0], &cfg).unwrap();
    assert_eq!(z, vec![0.3, -0.2]);
    assert!(reports.is_empty());
}

/// Three blocks with dense 2×2 convex quadratics `½ zᵀA z − bᵀz`, two groups.
fn separable_qp() -> (Nlp, Vec<[[f64; 2]; 2]>, Vec<[f64; 2]>) {
    let mats = vec![[[2.0, 0.5], [0.5, 1.0]], [[3.0, -1.0], [-1.0, 2.0]], [[1.5, 0.2], [0.2, 4.0]]];
    let rhs = vec![[1.0, -2.0], [0.5, 0.25], [-3.0, 1.0]];
    let mut builder = BlockNlp::builder(1);
    for (i, (a, b)) in mats.iter().zip(&rhs).enumerate() {
        let (a, b) = (*a, *b);
        let cost = smooth_fn(
            move |z: &[f64]| {
                let az = [a[0][0] * z[0] + a[0][1] * z[1], a[1][0] * z[0] + a[1][1] * z[1]];
                0.5 * (z[0] * az[0] + z[1] * az[1]) - b[0] * z[0] - b[1] * z[1]
            },
            move |z: &[f64], g: &mut [f64]| {
                g[0] = a[0][0] * z[0] + a[0][1] * z[1] - b[0];
                g[1] = a[1][0] * z[0] + a[1][1] * z[1] - b[1];
            },
        );
        builder = builder.block(Block::new(BoxSet::uniform(2, -100.0, 100.0).unwrap(), usize::from(i == 2)).cost(cost));
    }
    (builder.build().unwrap(), mats, rhs)
}

#[test]
fn sweeps_solve_a_separable_qp() {
    let (nlp, mats, rhs) = separable_qp();
    let cfg = Config { sweeps: 200, ..Config::default() };
    let (z, reports) = primal_sweeps(&nlp, &[0.0; 6], &[], &[0.0], &cfg).unwrap();
    assert_eq!(reports.len(), 200);
    let omega = kkt_residual(&nlp, &z, &[], &[0.0], cfg.rho).unwrap();
    assert!(omega <= 1e-8, "{omega}");

    let mut a = vec![vec![0.0; 6]; 6];
    let mut b = vec![0.0; 6];
    for (i, (m, r)) in mats.iter().zip(&rhs).enumerate() {
        for p in 0..2 {
            for q in 0..2 {
                a[2 * i + p][2 * i + q] = m[p][q];
            }
            b[2 * i + p] = r[p];
        }
    }
    let exact = nlp.bounds().project(&dense_solve(a, b)).unwrap();
    for (zi, ei) in z.iter().zip(&exact) {
        assert!((zi - ei).abs() <= 1e-8, "{zi} vs {ei}");
    }
}

#[test]
fn dual_update_examples() {
    // Scalar g(z) = z, T = 0: G = z.
    let nlp = BlockNlp::builder(1)
        .block(Block::new(BoxSet::uniform(1, -1.0, 1.0).unwrap(), 0).local_constraints(
            equality_fn(1, |z: &[f64], o: &mut [f64]| o[0] = z[0], |_: &[f64], v: &[f64], o: &mut [f64]| o[0] = v[0]),
            None,
        ))
        .build()
        .unwrap();
    assert_eq!(dual_update(&nlp, &[0.0], &[0.3], &[0.0], 10.0).unwrap(), vec![0.3]);
    assert_eq!(dual_update(&nlp, &[0.1], &[1.0], &[0.0], 10.0).unwrap(), vec![2.0]);
    let once = dual_update(&nlp, &[0.25], &[0.5], &[0.0], 4.0).unwrap();
    let twice = dual_update(&nlp, &[0.25], &once, &[0.0], 4.0).unwrap();
    assert_eq!(twice, vec![0.5 + 2.0 * 4.0 * 0.25]);
}

#[test]
fn track_step_is_a_fixed_point_at_a_kkt_point() {
    let nlp = toy_qp::<f64>().unwrap();
    let w = toy_qp_solution(1.0);
    let mut solver = SplittingSolver::new(&nlp, Config::default()).unwrap();
    let mut cur = w.clone();
    for _ in 0..50 {
        cur = solver.track_step(&cur, &[1.0]).unwrap().w_out;
        assert_eq!(cur, w);
    }
}

fn motor_problem() -> (DcMotorSpec<f64>, Nlp, Iterate, Vec<f64>) {
    let spec = DcMotorSpec::new(0.018);
    let nlp = build_dc_motor_nlp(&spec).unwrap();
    let (x1, _) = dc_motor_equilibrium(0.0, &spec.params).unwrap();
    let s = vec![x1, 0.0, 2.0];
    let z = dc_motor_rollout(&spec, [x1, 0.0], &vec![1.33; spec.horizon], 2.0);
    let w = Iterate::with_zero_multipliers(&nlp, z);
    (spec, nlp, w, s)
}

#[test]
fn single_stage_homotopy_matches_plain_step_bit_for_bit() {
    let (_, nlp, w0, s0) = motor_problem();
    let cfg = Config { sweeps: 36, ..Config::default() };
    let mut plain = SplittingSolver::new(&nlp, cfg.clone()).unwrap();
    let mut staged = SplittingSolver::new(&nlp, cfg).unwrap();
    let (mut a, mut b) = (w0.clone(), w0);
    let mut s_prev = s0.clone();
    for k in 0..20 {
        let s = vec![s0[0] - 0.01 * k as f64, 0.05 * k as f64, if k < 10 { 2.0 } else { -2.0 }];
        let ra = plain.track_step(&a, &s).unwrap();
        let rb = staged.track_step_homotopy(&b, &s_prev, &s).unwrap();
        assert_eq!(ra, rb);
        a = ra.w_out;
        b = rb.w_out;
        s_prev = s;
    }
}

#[test]
fn homotopy_stages_follow_the_path_and_split_the_budget() {
    let (_, nlp, w0, s0) = motor_problem();
    let cfg = Config { sweeps: 38, stages: 3, ..Config::default() };
    let mut solver = SplittingSolver::new(&nlp, cfg).unwrap();
    let s1 = vec![s0[0] + 0.3, 0.6, -2.0];
    let r = solver.track_step_homotopy(&w0, &s0, &s1).unwrap();
    let counts: Vec<usize> = r.stages.iter().map(|st: &StageReport<f64>| st.sweeps.len()).collect();
    assert_eq!(counts, vec![12, 12, 14]);
    for (j, st) in r.stages.iter().enumerate() {
        let tau = (j + 1) as f64 / 3.0;
        for (p, (&a, &b)) in st.param.iter().zip(s0.iter().zip(&s1)) {
            assert_eq!(*p, (1.0 - tau) * a + tau * b);
        }
    }
    assert_eq!(r.stages.last().unwrap().param, s1);
}

#[test]
fn toy_tracking_error_stays_bounded() {
    let nlp = toy_qp::<f64>().unwrap();
    let mut solver = SplittingSolver::new(&nlp, Config::default()).unwrap();
    let mut w = toy_qp_solution(0.0);
    w.z = vec![0.05, -0.03];
    w.mu = vec![0.04];
    let initial = w.distance(&toy_qp_solution(0.0));
    for k in 1..=200 {
        let s = 0.01 * k as f64;
        w = solver.track_step(&w, &[s]).unwrap().w_out;
        let err = w.distance(&toy_qp_solution(s));
        assert!(err <= 2.0 * initial, "step {k}: {err} > 2 × {initial}");
    }
}

#[test]
fn repeated_dual_updates_drive_toy_feasibility_down() {
    let nlp = toy_qp::<f64>().unwrap();
    let cfg = Config { rho: 10.0, ..Config::default() };
    let mut solver = SplittingSolver::new(&nlp, cfg).unwrap();
    let mut w = Iterate::with_zero_multipliers(&nlp, vec![0.0, 0.0]);
    let mut feas = Vec::new();
    for _ in 0..12 {
        w = solver.track_step(&w, &[1.0]).unwrap().w_out;
        feas.push(feasibility_norm(&nlp, &w.z, &[1.0]).unwrap());
    }
    for pair in feas.windows(2) {
        assert!(pair[1] <= pair[0] || pair[1] <= 1e-12, "{feas:?}");
    }
    assert!(*feas.last().unwrap() <= 1e-6, "{feas:?}");
}

#[test]
fn full_solve_toy_matches_hand_kkt() {
    let nlp = toy_qp::<f64>().unwrap();
    let start = Iterate::with_zero_multipliers(&nlp, vec![3.0, -2.0]);
    let sol = full_solve(&nlp, &start, &[1.0], 100.0, 1e-9).unwrap();
    let exact = toy_qp_solution(1.0);
    assert!(sol.w.distance(&exact) <= 1e-7, "{:?}", sol.w);
    assert!(sol.omega <= 1e-9 && sol.feasibility <= 1e-9);
}

#[test]
fn full_solve_returns_converged_input_untouched() {
    let nlp = toy_qp::<f64>().unwrap();
    let exact = toy_qp_solution(1.0);
    let sol = full_solve(&nlp, &exact, &[1.0], 100.0, 1e-9).unwrap();
    assert_eq!(sol.rounds, 0);
    assert_eq!(sol.w, exact);
}

#[test]
fn full_solve_motor_at_the_initial_state() {
    let (_, nlp, w0, s) = motor_problem();
    let sol = full_solve(&nlp, &w0, &s, 100.0, 1e-7).unwrap();
    assert!(sol.omega <= 1e-6 && sol.feasibility <= 1e-6);
    assert!(feasibility_norm(&nlp, &sol.w.z, &s).unwrap() <= 1e-6);
}

#[test]
fn full_solve_rejects_zero_tolerance() {
    let nlp = toy_qp::<f64>().unwrap();
    let w = toy_qp_solution(1.0);
    assert!(matches!(full_solve(&nlp, &w, &[1.0], 100.0, 0.0), Err(Error::InvalidConfig { .. })));
}

#[test]
fn kkt_residual_examples() {
    let flat = scalar_program(|z| 3.0 * z, |_| 3.0, 0.0, 1.0);
    // Gradient pushes out of the box at the active lower bound.
    assert_eq!(kkt_residual(&flat, &[0.0], &[], &[0.0], 1.0).unwrap(), 0.0);
    // Interior with z − ∇L interior: the residual is |∇L|.
    let quad = scalar_program(|z| (z - 0.5) * (z - 0.5), |z| 2.0 * (z - 0.5), -10.0, 10.0);
    assert!((kkt_residual(&quad, &[0.6], &[], &[0.0], 1.0).unwrap() - 0.2).abs() < 1e-15);
    assert_eq!(kkt_residual(&quad, &[0.5], &[], &[0.0], 1.0).unwrap(), 0.0);
}

#[test]
fn feasibility_norm_of_a_three_four_residual() {
    let nlp = BlockNlp::builder(2)
        .block(Block::new(BoxSet::uniform(2, -10.0, 10.0).unwrap(), 0).local_constraints(
            equality_fn(
                2,
                |z: &[f64], o: &mut [f64]| o.copy_from_slice(z),
                |_: &[f64], v: &[f64], o: &mut [f64]| o.copy_from_slice(v),
            ),
            Some(DenseMatrix::identity(2)),
        ))
        .build()
        .unwrap();
    assert_eq!(feasibility_norm(&nlp, &[1.0, 1.0], &[2.0, 3.0]).unwrap(), 5.0);
}

#[test]
fn motor_sweeps_decrease_and_certify() {
    let (_, nlp, _, s) = motor_problem();
    let mut r = rng(11);
    let cfg = Config { sweeps: 1, ..Config::default() };
    for _ in 0..5 {
        let mu = random_vec(nlp.n_constraints(), 5.0, &mut r);
        let mut z = random_in_box(&nlp, &mut r);
        let mut solver = SplittingSolver::new(&nlp, cfg.clone()).unwrap();
        for _ in 0..30 {
            let (next, reports) = solver.primal_sweeps(&z, &mu, &s, 1).unwrap();
            let rep = &reports[0];
            assert!(rep.value_after <= rep.value_before + 1e-10);
            assert!(rep.decrease_slack(cfg.alpha_min()) >= -1e-10);

            let res = relative_error_residual(&nlp, &z, &next, &rep.curvatures, &mu, &s, cfg.rho).unwrap();
            let defect = certificate_defect(&nlp, &next, &res, &mu, &s, cfg.rho, 1e-9).unwrap();
            assert!(defect <= 1e-8, "certificate defect {defect}");
            z = next;
        }
    }
}

#[test]
fn parallel_and_sequential_groups_agree_bitwise() {
    use otsplit::models::{agent_rollout, build_unicycle_nlp, UnicycleFormationSpec};
    let spec = UnicycleFormationSpec::new(0.35);
    let nlp = build_unicycle_nlp(&spec).unwrap();
    let window = spec.reference_window(0.0);
    let inputs = vec![[0.25, 0.05]; spec.horizon];
    let starts = [[0.0, 0.0, 0.0], [0.5, -0.5, 0.0], [0.5, 0.5, 0.0]];
    let z: Vec<f64> = (0..3).flat_map(|a| agent_rollout(&spec, a, starts[a], &inputs, &window)).collect();
    let mut s: Vec<f64> = starts.iter().flatten().copied().collect();
    s.extend(&window);
    let mu = random_vec(nlp.n_constraints(), 1.0, &mut rng(3));
    for curvature in [CurvatureMemory::Reset, CurvatureMemory::Carry, CurvatureMemory::CarryWithDecay] {
        let base = Config { rho: 2000.0, sweeps: 25, curvature, ..Config::default() };
        let seq = primal_sweeps(&nlp, &z, &mu, &s, &base).unwrap();
        let par = primal_sweeps(&nlp, &z, &mu, &s, &Config { parallel: true, ..base }).unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn sweeps_require_a_point_in_the_box() {
    let nlp = toy_qp::<f64>().unwrap();
    assert!(primal_sweeps(&nlp, &[11.0, 0.0], &[0.0], &[1.0], &Config::default()).is_err());
}

#[test]
fn single_precision_tracking_runs() {
    let nlp = toy_qp::<f32>().unwrap();
    let cfg = otsplit::SolverConfig::<f32>::default();
    let mut solver = SplittingSolver::new(&nlp, cfg).unwrap();
    let mut w = toy_qp_solution(0.0f32);
    for k in 1..=50 {
        w = solver.track_step(&w, &[0.01 * k as f32]).unwrap().w_out;
    }
    assert!(w.distance(&toy_qp_solution(0.5f32)) < 0.05);
}

