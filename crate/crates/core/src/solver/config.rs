use crate::error::{Error, Result};
use crate::scalar::Real;

/// What happens to the per-block curvature estimate `c_i` between sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CurvatureMemory {
    /// Restart every sweep from `c_init`.
    Reset,
    /// Keep the last accepted value.
    Carry,
    /// Keep the last accepted value, divided by `β` at the start of each sweep
    /// so the estimate can move back down.
    #[default]
    CarryWithDecay,
}

/// Every knob of the splitting scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    /// Penalty parameter `ρ`.
    pub rho: T,
    /// Primal sweeps per time step, shared by all homotopy stages.
    pub sweeps: usize,
    /// Proximal regularisation `α_i`, one per group, or a single value for all.
    pub alpha: Vec<T>,
    /// Backtracking factor `β > 1`.
    pub beta: T,
    pub c_init: T,
    /// Curvature above which backtracking gives up.
    pub c_max: T,
    /// Homotopy stages `D` (1 = plain tracking).
    pub stages: usize,
    pub curvature: CurvatureMemory,
    /// Update the blocks of a group on the rayon pool.
    pub parallel: bool,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            rho: T::lit(100.0),
            sweeps: 36,
            alpha: vec![T::lit(1e-6)],
            beta: T::lit(2.0),
            c_init: T::one(),
            c_max: T::lit(1e12),
            stages: 1,
            curvature: CurvatureMemory::default(),
            parallel: false,
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn validate(&self, n_groups: usize) -> Result<()> {
        if !(self.rho > T::zero()) || !self.rho.is_finite() {
            return Err(Error::config("rho", "must be positive and finite"));
        }
        if !(self.beta > T::one()) {
            return Err(Error::config("beta", "must be greater than 1"));
        }
        if !(self.c_init > T::zero()) {
            return Err(Error::config("c_init", "must be positive"));
        }
        if !(self.c_max >= self.c_init) {
            return Err(Error::config("c_max", "must be at least c_init"));
        }
        if self.stages == 0 {
            return Err(Error::config("stages", "must be at least 1"));
        }
        if self.alpha.len() != 1 && self.alpha.len() != n_groups {
            return Err(Error::config(
                "alpha",
                format!("expected 1 or {n_groups} values, got {}", self.alpha.len()),
            ));
        }
        if self.alpha.iter().any(|&a| !(a > T::zero())) {
            return Err(Error::config("alpha", "all entries must be positive"));
        }
        Ok(())
    }

    pub fn alpha_for_group(&self, group: usize) -> T {
        if self.alpha.len() == 1 {
            self.alpha[0]
        } else {
            self.alpha[group]
        }
    }

    /// `min_i α_i`, the constant of the sufficient decrease inequality.
    pub fn alpha_min(&self) -> T {
        self.alpha.iter().copied().fold(T::infinity(), T::min)
    }

    /// Sweeps run in homotopy stage `j ∈ 1..=D`: `⌊M/D⌋`, with the remainder
    /// going to the last stage.
    pub fn stage_sweeps(&self, j: usize) -> usize {
        let base = self.sweeps / self.stages;
        if j == self.stages {
            base + self.sweeps % self.stages
        } else {
            base
        }
    }
}
