//! Optimality tracking splitting solver and its full-accuracy oracle.

mod config;
mod oracle;
mod splitting;

pub use config::{CurvatureMemory, SolverConfig};
pub use oracle::{full_solve, full_solve_with, InnerMethod, OracleOptions, OracleSolution};
pub use splitting::{
    bck_min, certificate_defect, dual_update, primal_sweeps, relative_error_residual, BlockStep,
    SplittingSolver, StageReport, SweepReport, TrackStepResult,
};
