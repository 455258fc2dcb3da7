//! `otsplit` — run closed-loop tracking experiments and write CSV traces.
//!
//! Settings are resolved as built-in defaults < `--config` file < flags.
//! `OTSPLIT_THREADS` caps the worker pool used by `sweep` and by
//! `--parallel-blocks`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use otsplit::config::ConfigMap;
use otsplit::models::{DcMotorSpec, UnicycleFormationSpec};
use otsplit::sim::{
    fmt_real, run_closed_loop, run_reference_loop, summarize_window, write_trace_csv, BudgetModel, ClosedLoopModel,
    ClosedLoopTrace, DcMotorScenario, RunOptions, ToyScenario, UnicycleScenario, WindowSummary,
};
use otsplit::solver::full_solve;
use otsplit::{Error, PrimalDual, SolverConfig};

#[derive(Parser)]
#[command(name = "otsplit", version, about = "Optimality tracking experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one closed loop and its full-accuracy reference; writes two CSVs.
    Track(TrackArgs),
    /// Repeat `track` over a grid of one setting; writes a summary CSV.
    Sweep(SweepArgs),
    /// Solve the program once to tolerance and print the solution.
    Solve(SolveArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    DcMotor,
    Unicycles,
    ToyQp,
}

impl ModelKind {
    fn parse(name: &str) -> Option<Self> {
        <Self as ValueEnum>::from_str(name, false).ok()
    }
}

#[derive(Args, Clone, Default)]
struct RunFlags {
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    /// Sampling period in seconds.
    #[arg(long)]
    dt: Option<f64>,
    /// Penalty parameter.
    #[arg(long)]
    rho: Option<f64>,
    /// Computational power in sweeps per second.
    #[arg(long)]
    power: Option<f64>,
    /// Homotopy stages per step.
    #[arg(long, short = 'D')]
    stages: Option<usize>,
    /// Simulated time in seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comparison window `t0,t1` for the tracking error (default: whole run).
    #[arg(long, value_delimiter = ',')]
    window: Option<Vec<f64>>,
    /// Key = value file with run settings and model overrides.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Update the blocks of a group in parallel.
    #[arg(long)]
    parallel_blocks: bool,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Trace of the tracking loop.
    #[arg(long)]
    out: PathBuf,
    /// Trace of the reference loop (default: `<out stem>_reference.csv`).
    #[arg(long)]
    reference_out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Axis {
    Dt,
    Rho,
    Power,
    #[value(name = "D")]
    Stages,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunFlags,
    #[arg(long, value_enum)]
    axis: Axis,
    /// Comma-separated grid values.
    #[arg(long, value_delimiter = ',', required = true)]
    grid: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Parameter vector (default: the model's parameter at its initial state).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    param: Option<Vec<f64>>,
    /// Target for both the KKT residual and the constraint violation.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig { .. } | Error::Parse { .. } | Error::InvalidBox(_) | Error::Dimension { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> Failure + '_ {
    move |e| Failure::Runtime(format!("{}: {e}", path.display()))
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone)]
struct RunSpec {
    model: ModelKind,
    dt: Option<f64>,
    rho: f64,
    power: f64,
    stages: usize,
    duration: Option<f64>,
    seed: u64,
    window: Option<(f64, f64)>,
    parallel_blocks: bool,
    overrides: ConfigMap,
}

impl RunSpec {
    fn resolve(flags: &RunFlags) -> Result<Self, Failure> {
        let overrides = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
                ConfigMap::parse(&text)?
            }
            None => ConfigMap::default(),
        };
        let model = match (flags.model, overrides.get_str("model")) {
            (Some(m), _) => m,
            (None, Some(name)) => {
                ModelKind::parse(name).ok_or_else(|| usage(format!("config: unknown model `{name}`")))?
            }
            (None, None) => return Err(usage("missing --model")),
        };
        let window = match &flags.window {
            Some(w) if w.len() == 2 => Some((w[0], w[1])),
            Some(_) => return Err(usage("--window expects `t0,t1`")),
            None => overrides.get_array::<f64, 2>("window")?.map(|[a, b]| (a, b)),
        };
        let spec = Self {
            model,
            dt: flags.dt.or(overrides.get("dt")?),
            rho: flags.rho.or(overrides.get("rho")?).unwrap_or(100.0),
            power: flags.power.or(overrides.get("power")?).unwrap_or(2000.0),
            stages: flags.stages.or(overrides.get("stages")?).unwrap_or(1),
            duration: flags.duration.or(overrides.get("duration")?),
            seed: flags.seed.or(overrides.get("seed")?).unwrap_or(0),
            window,
            parallel_blocks: flags.parallel_blocks || overrides.get("parallel_blocks")?.unwrap_or(false),
            overrides,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<(), Failure> {
        let positive = |field: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => Err(Error::InvalidConfig {
                field: field.into(),
                reason: "must be positive".into(),
            }),
            _ => Ok(()),
        };
        positive("dt", self.dt)?;
        positive("duration", self.duration)?;
        positive("rho", Some(self.rho))?;
        BudgetModel::new(self.power)?;
        if self.stages == 0 {
            return Err(Error::InvalidConfig {
                field: "stages".into(),
                reason: "must be at least 1".into(),
            }
            .into());
        }
        if let Some((a, b)) = self.window {
            if !(a <= b) {
                return Err(usage("window: start must not exceed end"));
            }
        }
        Ok(())
    }

    fn require_dt(&self) -> Result<f64, Failure> {
        self.dt.ok_or_else(|| usage("missing --dt"))
    }

    fn solver_config(&self) -> SolverConfig<f64> {
        SolverConfig {
            rho: self.rho,
            stages: self.stages,
            parallel: self.parallel_blocks,
            ..SolverConfig::default()
        }
    }

    fn build_model(&self, dt: f64) -> Result<Box<dyn ClosedLoopModel<f64>>, Failure> {
        Ok(match self.model {
            ModelKind::DcMotor => {
                let mut spec = DcMotorSpec::new(dt);
                spec.apply_config(&self.overrides)?;
                Box::new(DcMotorScenario::new(spec)?)
            }
            ModelKind::Unicycles => {
                let mut spec = UnicycleFormationSpec::new(dt);
                spec.apply_config(&self.overrides)?;
                Box::new(UnicycleScenario::new(spec)?)
            }
            ModelKind::ToyQp => Box::new(ToyScenario::new(dt)?),
        })
    }

    fn default_duration(&self) -> f64 {
        match self.model {
            ModelKind::DcMotor => 6.0,
            ModelKind::Unicycles => {
                let mut spec = UnicycleFormationSpec::<f64>::new(1.0);
                // Only the path matters here; a bad override is reported later.
                let _ = spec.apply_config(&self.overrides);
                spec.path.duration()
            }
            ModelKind::ToyQp => 1.0,
        }
    }

    fn duration(&self) -> f64 {
        self.duration.unwrap_or_else(|| self.default_duration())
    }
}

struct Experiment {
    run: Result<ClosedLoopTrace<f64>, (Error, ClosedLoopTrace<f64>)>,
    reference: Result<ClosedLoopTrace<f64>, (Error, ClosedLoopTrace<f64>)>,
}

fn run_experiment(spec: &RunSpec) -> Result<Experiment, Failure> {
    let dt = spec.require_dt()?;
    let model = spec.build_model(dt)?;
    let cfg = spec.solver_config();
    cfg.validate(model.nlp().n_groups())?;
    let budget = BudgetModel::new(spec.power)?;
    let opts = RunOptions::new(spec.duration(), spec.seed);
    let run = run_closed_loop(model.as_ref(), &cfg, &budget, &opts).map_err(|f| (f.error, f.trace));
    let reference = run_reference_loop(model.as_ref(), &cfg, &opts).map_err(|f| (f.error, f.trace));
    Ok(Experiment { run, reference })
}

fn summarize(spec: &RunSpec, run: &ClosedLoopTrace<f64>, reference: &ClosedLoopTrace<f64>) -> Result<WindowSummary<f64>, Failure> {
    let (t0, t1) = spec.window.unwrap_or((0.0, spec.duration()));
    Ok(summarize_window(run, reference, t0, t1)?)
}

fn write_csv(trace: &ClosedLoopTrace<f64>, path: &Path) -> Result<(), Failure> {
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    write_trace_csv(trace, &mut out).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}

fn companion_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}_reference.csv"))
}

fn cmd_track(args: &TrackArgs) -> Result<(), Failure> {
    let spec = RunSpec::resolve(&args.run)?;
    let ex = run_experiment(&spec)?;
    let ref_path = args.reference_out.clone().unwrap_or_else(|| companion_path(&args.out));
    // Partial traces are still written so a failed run can be inspected.
    let (run, run_err) = match ex.run {
        Ok(t) => (t, None),
        Err((e, t)) => (t, Some(e)),
    };
    let (reference, ref_err) = match ex.reference {
        Ok(t) => (t, None),
        Err((e, t)) => (t, Some(e)),
    };
    write_csv(&run, &args.out)?;
    write_csv(&reference, &ref_path)?;
    if let Some(e) = run_err {
        return Err(Failure::Runtime(format!("tracking loop failed: {e}")));
    }
    if let Some(e) = ref_err {
        return Err(Failure::Runtime(format!("reference loop failed: {e}")));
    }
    let w = summarize(&spec, &run, &reference)?;
    println!(
        "{} steps, M = {} sweeps/step; wrote {} and {}",
        run.rows.len(),
        run.meta.sweeps,
        args.out.display(),
        ref_path.display()
    );
    println!(
        "E = {:.6e}  mean omega = {:.6e}  mean |G| = {:.6e}  ({} samples)",
        w.tracking_error, w.mean_omega, w.mean_feasibility, w.samples
    );
    Ok(())
}

fn with_axis(spec: &RunSpec, axis: Axis, v: f64) -> Result<RunSpec, Failure> {
    let mut s = spec.clone();
    match axis {
        Axis::Dt => s.dt = Some(v),
        Axis::Rho => s.rho = v,
        Axis::Power => s.power = v,
        Axis::Stages => {
            if !(v >= 1.0 && v.fract() == 0.0) {
                return Err(usage(format!("grid: D must be a positive integer, got {v}")));
            }
            s.stages = v as usize;
        }
    }
    s.validate()?;
    Ok(s)
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Dt => "dt",
        Axis::Rho => "rho",
        Axis::Power => "power",
        Axis::Stages => "D",
    }
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    if args.grid.is_empty() {
        return Err(usage("empty grid"));
    }
    let base = RunSpec::resolve(&args.run)?;
    let points = args
        .grid
        .iter()
        .map(|&v| with_axis(&base, args.axis, v))
        .collect::<Result<Vec<_>, _>>()?;
    for p in &points {
        p.require_dt()?;
    }
    // Collected in grid order whatever the completion order.
    let results: Vec<Result<WindowSummary<f64>, Failure>> = points
        .par_iter()
        .map(|p| {
            let ex = run_experiment(p)?;
            let run = ex.run.map_err(|(e, _)| Failure::Runtime(format!("tracking loop failed: {e}")))?;
            let reference = ex.reference.map_err(|(e, _)| Failure::Runtime(format!("reference loop failed: {e}")))?;
            summarize(p, &run, &reference)
        })
        .collect();

    let path = &args.out;
    let mut out = BufWriter::new(File::create(path).map_err(io_err(path))?);
    writeln!(out, "{},E,mean_omega,mean_feasG", axis_name(args.axis)).map_err(io_err(path))?;
    for (v, r) in args.grid.iter().zip(results) {
        let w = r.map_err(|f| match f {
            Failure::Runtime(m) => Failure::Runtime(format!("{} = {v}: {m}", axis_name(args.axis))),
            other => other,
        })?;
        writeln!(
            out,
            "{v},{},{},{}",
            fmt_real(w.tracking_error),
            fmt_real(w.mean_omega),
            fmt_real(w.mean_feasibility)
        )
        .map_err(io_err(path))?;
        println!("{} = {v}: E = {:.6e}", axis_name(args.axis), w.tracking_error);
    }
    out.flush().map_err(io_err(path))
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Failure> {
    let spec = RunSpec::resolve(&args.run)?;
    if !(args.tol > 0.0) {
        return Err(Error::InvalidConfig {
            field: "tol".into(),
            reason: "must be positive".into(),
        }
        .into());
    }
    let dt = spec.dt.unwrap_or(match spec.model {
        ModelKind::DcMotor => 0.018,
        ModelKind::Unicycles => 0.35,
        ModelKind::ToyQp => 1.0,
    });
    let model = spec.build_model(dt)?;
    let nlp = model.nlp();
    let x0 = model.initial_state();
    let s = match &args.param {
        Some(p) => p.clone(),
        None => model.parameter(&x0, 0.0),
    };
    nlp.check_param(&s)?;
    let z0 = model.initial_guess(&x0, &s);
    let w0 = PrimalDual::new(z0, vec![0.0; nlp.n_constraints()]);
    let sol = full_solve(nlp, &w0, &s, spec.rho, args.tol)?;
    let join = |v: &[f64]| v.iter().map(|x| fmt_real(*x)).collect::<Vec<_>>().join(" ");
    println!("z {}", join(&sol.w.z));
    println!("mu {}", join(&sol.w.mu));
    println!("omega {:.6e}", sol.omega);
    println!("feasibility {:.6e}", sol.feasibility);
    println!("rounds {}", sol.rounds);
    println!("inner_iterations {}", sol.inner_iters);
    println!("rho {}", sol.rho);
    Ok(())
}

fn init_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("OTSPLIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("OTSPLIT_THREADS: expected a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Track(a) => cmd_track(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Solve(a) => cmd_solve(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
