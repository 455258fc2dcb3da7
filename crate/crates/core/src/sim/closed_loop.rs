use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{feasibility_norm, kkt_residual, tracking_error};
use crate::error::{Error, Result};
use crate::problem::{BlockNlp, PrimalDual};
use crate::scalar::Real;
use crate::solver::{full_solve, SolverConfig, SplittingSolver, SweepReport};

use super::budget::{compute_budget, floor_count, BudgetModel};
use super::ode::{integrate_plant, OdeOptions};

/// A plant together with the receding-horizon program that controls it.
pub trait ClosedLoopModel<T: Real>: Sync {
    fn id(&self) -> &'static str;
    fn nlp(&self) -> &BlockNlp<T>;
    /// Sampling period the program was discretised with.
    fn dt(&self) -> T;
    fn initial_state(&self) -> Vec<T>;
    /// Parameter `s_k` from the measured state at time `t`.
    fn parameter(&self, x: &[T], t: T) -> Vec<T>;
    /// Starting point for the initial full-accuracy solve.
    fn initial_guess(&self, x: &[T], s: &[T]) -> Vec<T>;
    /// Input applied over the next period, read from the decision vector.
    fn input(&self, z: &[T]) -> Vec<T>;
    fn plant_rhs(&self, x: &[T], u: &[T], dx: &mut [T]);
    /// Scalar output the tracking error is measured on.
    fn output(&self, x: &[T], u: &[T]) -> T;
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions<T> {
    pub duration: T,
    pub seed: u64,
    /// Half-width of the uniform perturbation applied to `w*₀`.
    pub perturbation: T,
    /// Tolerance of the initial solve and of every reference-loop step.
    pub oracle_tol: T,
    pub ode: OdeOptions<T>,
    /// Keep the sweep reports of every step.
    pub record_sweeps: bool,
    /// Keep every iterate `w̄_k`.
    pub record_iterates: bool,
}

impl<T: Real> RunOptions<T> {
    pub fn new(duration: T, seed: u64) -> Self {
        Self {
            duration,
            seed,
            perturbation: T::lit(0.05),
            oracle_tol: T::lit(1e-7),
            ode: OdeOptions::default(),
            record_sweeps: false,
            record_iterates: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    pub k: usize,
    pub t: T,
    pub s: Vec<T>,
    /// Plant state measured at `t`.
    pub x: Vec<T>,
    pub u: Vec<T>,
    /// `y_k` as defined by the model.
    pub y: T,
    /// KKT residual of `z̄_k` for the multiplier its primal loop used.
    pub omega: T,
    pub feasibility: T,
    pub aug_lagrangian: T,
    pub sweeps_used: usize,
    /// Solver time of the step; not part of any output file.
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMeta<T> {
    pub model: &'static str,
    pub dt: T,
    pub rho: T,
    /// Sweeps per period (0 for the reference loop).
    pub sweeps: usize,
    pub stages: usize,
    pub seed: u64,
    pub reference: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopTrace<T> {
    pub meta: TraceMeta<T>,
    pub rows: Vec<TraceRow<T>>,
    /// Per step, when requested.
    pub sweeps: Vec<Vec<SweepReport<T>>>,
    /// `w̄_k` per step, when requested.
    pub iterates: Vec<PrimalDual<T>>,
}

impl<T: Real> ClosedLoopTrace<T> {
    pub fn outputs(&self) -> Vec<T> {
        self.rows.iter().map(|r| r.y).collect()
    }

    /// Indices of rows with `t0 ≤ t ≤ t1`.
    pub fn window(&self, t0: T, t1: T) -> Vec<usize> {
        let slack = T::lit(1e-9);
        (0..self.rows.len())
            .filter(|&i| self.rows[i].t >= t0 - slack && self.rows[i].t <= t1 + slack)
            .collect()
    }
}

/// A run that failed part-way; `trace` holds every completed step.
#[derive(Debug)]
pub struct RunFailure<T> {
    pub error: Error,
    pub trace: ClosedLoopTrace<T>,
}

impl<T> std::fmt::Display for RunFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

pub fn step_count<T: Real>(duration: T, dt: T) -> usize {
    floor_count(duration.as_f64() / dt.as_f64())
}

fn validate<T: Real, M: ClosedLoopModel<T> + ?Sized>(model: &M, opts: &RunOptions<T>) -> Result<()> {
    if !(opts.duration > T::zero()) {
        return Err(Error::config("duration", "must be positive"));
    }
    if !(model.dt() > T::zero()) {
        return Err(Error::config("dt", "must be positive"));
    }
    if !(opts.oracle_tol > T::zero()) {
        return Err(Error::config("tol", "must be positive"));
    }
    if !(opts.perturbation >= T::zero()) {
        return Err(Error::config("perturbation", "must be non-negative"));
    }
    Ok(())
}

struct Recorder<'m, T: Real, M: ?Sized> {
    model: &'m M,
    trace: ClosedLoopTrace<T>,
}

impl<'m, T: Real, M: ClosedLoopModel<T> + ?Sized> Recorder<'m, T, M> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        k: usize,
        x: &[T],
        s: &[T],
        w: &PrimalDual<T>,
        loop_mu: &[T],
        rho: T,
        omega: Option<T>,
        sweeps_used: usize,
        elapsed: Duration,
    ) -> Result<Vec<T>> {
        let nlp = self.model.nlp();
        let u = self.model.input(&w.z);
        let omega = match omega {
            Some(o) => o,
            None => kkt_residual(nlp, &w.z, loop_mu, s, rho)?,
        };
        let row = TraceRow {
            k,
            t: T::from_usize_lossy(k) * self.model.dt(),
            s: s.to_vec(),
            x: x.to_vec(),
            y: self.model.output(x, &u),
            u: u.clone(),
            omega,
            feasibility: feasibility_norm(nlp, &w.z, s)?,
            aug_lagrangian: nlp.aug_lagrangian(&w.z, loop_mu, s, rho)?,
            sweeps_used,
            elapsed,
        };
        if !row.omega.is_finite() || !row.feasibility.is_finite() {
            return Err(Error::NonFinite {
                term: format!("trace row {k}"),
            });
        }
        self.trace.rows.push(row);
        Ok(u)
    }

    fn advance_plant(&self, x: &[T], u: &[T], opts: &RunOptions<T>) -> Result<Vec<T>> {
        let model = self.model;
        integrate_plant(|xs: &[T], dx: &mut [T]| model.plant_rhs(xs, u, dx), x, model.dt(), &opts.ode)
    }
}

/// `w*₀` plus a seeded uniform perturbation of every entry, with `z`
/// projected back onto the box.
pub fn perturbed_start<T: Real>(nlp: &BlockNlp<T>, w: &PrimalDual<T>, half_width: T, seed: u64) -> Result<PrimalDual<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jitter = |v: T| {
        if half_width == T::zero() {
            v
        } else {
            v + T::lit(rng.random_range(-1.0..1.0)) * half_width
        }
    };
    let z: Vec<T> = w.z.iter().map(|&v| jitter(v)).collect();
    let mu = w.mu.iter().map(|&v| jitter(v)).collect();
    Ok(PrimalDual::new(nlp.bounds().project(&z)?, mu))
}

/// Receding-horizon loop driven by the splitting solver under the modelled
/// budget. The sweep count in `cfg` is overwritten by the budget.
pub fn run_closed_loop<T: Real, M: ClosedLoopModel<T> + ?Sized>(
    model: &M,
    cfg: &SolverConfig<T>,
    budget: &BudgetModel<T>,
    opts: &RunOptions<T>,
) -> Result<ClosedLoopTrace<T>, RunFailure<T>> {
    let b = compute_budget(budget, model.dt(), cfg.stages).map_err(|e| fail(e, model, cfg, 0, opts, false))?;
    let cfg = SolverConfig {
        sweeps: b.total,
        ..cfg.clone()
    };
    let mut rec = Recorder {
        model,
        trace: empty_trace(model, &cfg, b.total, opts, false),
    };
    match drive_splitting(&mut rec, &cfg, opts) {
        Ok(()) => Ok(rec.trace),
        Err(error) => Err(RunFailure { error, trace: rec.trace }),
    }
}

fn drive_splitting<T: Real, M: ClosedLoopModel<T> + ?Sized>(
    rec: &mut Recorder<'_, T, M>,
    cfg: &SolverConfig<T>,
    opts: &RunOptions<T>,
) -> Result<()> {
    let model = rec.model;
    validate(model, opts)?;
    let nlp = model.nlp();
    let steps = step_count(opts.duration, model.dt());
    let mut solver = SplittingSolver::new(nlp, cfg.clone())?;

    let mut x = model.initial_state();
    let s0 = model.parameter(&x, T::zero());
    let start = Instant::now();
    let guess = PrimalDual::with_zero_multipliers(nlp, model.initial_guess(&x, &s0));
    let exact = full_solve(nlp, &guess, &s0, cfg.rho, opts.oracle_tol)?;
    let mut w = perturbed_start(nlp, &exact.w, opts.perturbation, opts.seed)?;
    let mu0 = w.mu.clone();
    let mut u = rec.push(0, &x, &s0, &w, &mu0, cfg.rho, None, 0, start.elapsed())?;
    if opts.record_iterates {
        rec.trace.iterates.push(w.clone());
    }
    if opts.record_sweeps {
        rec.trace.sweeps.push(Vec::new());
    }
    let mut s_prev = s0;

    for k in 1..steps {
        x = rec.advance_plant(&x, &u, opts)?;
        let t = T::from_usize_lossy(k) * model.dt();
        let s = model.parameter(&x, t);
        let start = Instant::now();
        let step = solver.advance(&w, &s_prev, &s)?;
        let elapsed = start.elapsed();
        let used = step.sweep_count();
        w = step.w_out;
        u = rec.push(k, &x, &s, &w, &step.sweep_mu, cfg.rho, None, used, elapsed)?;
        if opts.record_iterates {
            rec.trace.iterates.push(w.clone());
        }
        if opts.record_sweeps {
            rec.trace.sweeps.push(step.stages.into_iter().flat_map(|st| st.sweeps).collect());
        }
        s_prev = s;
    }
    Ok(())
}

/// Same loop, but every step is solved to `opts.oracle_tol` by the
/// full-accuracy solver, warm-started at the previous solution.
pub fn run_reference_loop<T: Real, M: ClosedLoopModel<T> + ?Sized>(
    model: &M,
    cfg: &SolverConfig<T>,
    opts: &RunOptions<T>,
) -> Result<ClosedLoopTrace<T>, RunFailure<T>> {
    let mut rec = Recorder {
        model,
        trace: empty_trace(model, cfg, 0, opts, true),
    };
    match drive_reference(&mut rec, cfg, opts) {
        Ok(()) => Ok(rec.trace),
        Err(error) => Err(RunFailure { error, trace: rec.trace }),
    }
}

fn drive_reference<T: Real, M: ClosedLoopModel<T> + ?Sized>(
    rec: &mut Recorder<'_, T, M>,
    cfg: &SolverConfig<T>,
    opts: &RunOptions<T>,
) -> Result<()> {
    let model = rec.model;
    validate(model, opts)?;
    let nlp = model.nlp();
    let steps = step_count(opts.duration, model.dt());
    let mut x = model.initial_state();
    let mut w: Option<PrimalDual<T>> = None;
    for k in 0..steps {
        if k > 0 {
            let u = rec.trace.rows[k - 1].u.clone();
            x = rec.advance_plant(&x, &u, opts)?;
        }
        let t = T::from_usize_lossy(k) * model.dt();
        let s = model.parameter(&x, t);
        let start = Instant::now();
        let init = match w.take() {
            Some(prev) => prev,
            None => PrimalDual::with_zero_multipliers(nlp, model.initial_guess(&x, &s)),
        };
        let sol = full_solve(nlp, &init, &s, cfg.rho, opts.oracle_tol)?;
        let elapsed = start.elapsed();
        rec.push(k, &x, &s, &sol.w, &sol.subproblem_mu, cfg.rho, Some(sol.omega), 0, elapsed)?;
        if opts.record_iterates {
            rec.trace.iterates.push(sol.w.clone());
        }
        w = Some(sol.w);
    }
    Ok(())
}

fn empty_trace<T: Real, M: ClosedLoopModel<T> + ?Sized>(
    model: &M,
    cfg: &SolverConfig<T>,
    sweeps: usize,
    opts: &RunOptions<T>,
    reference: bool,
) -> ClosedLoopTrace<T> {
    ClosedLoopTrace {
        meta: TraceMeta {
            model: model.id(),
            dt: model.dt(),
            rho: cfg.rho,
            sweeps,
            stages: if reference { 1 } else { cfg.stages },
            seed: opts.seed,
            reference,
        },
        rows: Vec::new(),
        sweeps: Vec::new(),
        iterates: Vec::new(),
    }
}

fn fail<T: Real, M: ClosedLoopModel<T> + ?Sized>(
    error: Error,
    model: &M,
    cfg: &SolverConfig<T>,
    sweeps: usize,
    opts: &RunOptions<T>,
    reference: bool,
) -> RunFailure<T> {
    RunFailure {
        error,
        trace: empty_trace(model, cfg, sweeps, opts, reference),
    }
}

/// Window statistics of a run against its reference loop.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSummary<T> {
    /// `E` over the window.
    pub tracking_error: T,
    pub mean_omega: T,
    pub mean_feasibility: T,
    pub samples: usize,
}

/// Compares outputs of two traces over `t0 ≤ t ≤ t1`.
pub fn summarize_window<T: Real>(
    run: &ClosedLoopTrace<T>,
    reference: &ClosedLoopTrace<T>,
    t0: T,
    t1: T,
) -> Result<WindowSummary<T>> {
    let idx = run.window(t0, t1);
    if idx.is_empty() || idx.iter().any(|&i| i >= reference.rows.len()) {
        return Err(Error::Domain("traces do not cover the comparison window".into()));
    }
    let y: Vec<T> = idx.iter().map(|&i| run.rows[i].y).collect();
    let y_star: Vec<T> = idx.iter().map(|&i| reference.rows[i].y).collect();
    let n = T::from_usize_lossy(idx.len());
    Ok(WindowSummary {
        tracking_error: tracking_error(&y_star, &y)?,
        mean_omega: idx.iter().map(|&i| run.rows[i].omega).sum::<T>() / n,
        mean_feasibility: idx.iter().map(|&i| run.rows[i].feasibility).sum::<T>() / n,
        samples: idx.len(),
    })
}
