//! Optimality tracking for parametric non-convex programs.
//!
//! A block-structured NLP is solved in receding horizon by a fixed budget of
//! proximal alternating linearised sweeps on its augmented Lagrangian,
//! followed by a single multiplier update per sampling period. A homotopy
//! variant splits each parameter jump into stages.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod linalg;
pub mod models;
pub mod problem;
pub mod scalar;
pub mod sim;
pub mod solver;

pub use error::{Error, Result};
pub use problem::{
    equality_fn, project_box, smooth_fn, Block, BlockNlp, BlockSpec, BoxSet, EqualityMap, Parameter, PrimalDual,
    QuadraticCost, SmoothFn,
};
pub use scalar::Real;
pub use solver::{
    bck_min, dual_update, full_solve, primal_sweeps, CurvatureMemory, SolverConfig, SplittingSolver, TrackStepResult,
};

pub type Nlp = BlockNlp<f64>;
pub type Iterate = PrimalDual<f64>;
pub type Config = SolverConfig<f64>;
pub type Box64 = BoxSet<f64>;
pub type Trace = sim::ClosedLoopTrace<f64>;
