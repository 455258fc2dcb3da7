//! Closed-loop simulation: true plant integration, the modelled
//! computational budget, the receding-horizon drivers and CSV output.

pub mod budget;
pub mod closed_loop;
pub mod csv;
pub mod ode;
pub mod scenarios;

pub use budget::{compute_budget, Budget, BudgetModel};
pub use closed_loop::{
    perturbed_start, run_closed_loop, run_reference_loop, step_count, summarize_window, ClosedLoopModel,
    ClosedLoopTrace, RunFailure, RunOptions, TraceMeta, TraceRow, WindowSummary,
};
pub use csv::{fmt_real, write_trace_csv};
pub use ode::{integrate_plant, OdeOptions};
pub use scenarios::{DcMotorScenario, ToyScenario, UnicycleScenario};
