use crate::error::{Error, Result};
use crate::scalar::Real;

/// Modelled computational power in primal sweeps per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetModel<T> {
    pub power: T,
}

impl<T: Real> BudgetModel<T> {
    pub fn new(power: T) -> Result<Self> {
        if !(power > T::zero()) || !power.is_finite() {
            return Err(Error::config("power", "must be positive and finite"));
        }
        Ok(Self { power })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Budget {
    pub total: usize,
    pub per_stage: Vec<usize>,
}

/// `floor(power · dt)` sweeps per period, split over `stages` with the
/// remainder going to the last stage.
pub fn compute_budget<T: Real>(b: &BudgetModel<T>, dt: T, stages: usize) -> Result<Budget> {
    if !(dt > T::zero()) {
        return Err(Error::config("dt", "must be positive"));
    }
    if stages == 0 {
        return Err(Error::config("D", "must be at least 1"));
    }
    let total = floor_count(b.power.as_f64() * dt.as_f64());
    if total == 0 {
        log::warn!("computational budget exhausted: power·dt < 1, steps run the dual update only");
    }
    let base = total / stages;
    let mut per_stage = vec![base; stages];
    per_stage[stages - 1] += total % stages;
    Ok(Budget { total, per_stage })
}

/// `⌊x⌋`, except that values within a relative 1e-9 of an integer count as
/// that integer (`2000 · 0.018` is 35.99999… in binary).
pub(crate) fn floor_count(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.floor().max(0.0) as usize
    }
}
