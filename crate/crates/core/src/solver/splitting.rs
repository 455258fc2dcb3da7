//! Fixed-budget proximal alternating linearised sweeps with a single dual
//! update per time step, and its homotopy variant.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::dist2;
use crate::problem::{BlockNlp, PrimalDual};
use crate::scalar::Real;

use super::config::{CurvatureMemory, SolverConfig};

/// Lower floor for the decayed curvature estimate.
const C_FLOOR: f64 = 1e-12;

/// Result of one backtracking proximal step on a block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStep<T> {
    pub z_block: Vec<T>,
    /// Accepted curvature.
    pub curvature: T,
    /// Rejected candidates before acceptance.
    pub backtracks: usize,
}

/// Diagnostics of one Gauss-Seidel sweep over all groups.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport<T> {
    /// `L_ρ(z^(l), μ, s)`
    pub value_before: T,
    /// `L_ρ(z^(l+1), μ, s)`
    pub value_after: T,
    /// `‖z^(l+1) − z^(l)‖₂`
    pub step_norm: T,
    /// Accepted curvature per block.
    pub curvatures: Vec<T>,
    pub backtracks: Vec<usize>,
    /// Group-level proximal calls made in this sweep (one per group).
    pub group_calls: usize,
}

impl<T: Real> SweepReport<T> {
    /// `L(z^(l)) − L(z^(l+1)) − (α/2)‖z^(l+1) − z^(l)‖²`; non-negative up to
    /// rounding whenever the sufficient decrease inequality holds.
    pub fn decrease_slack(&self, alpha_min: T) -> T {
        self.value_before - self.value_after - alpha_min / T::lit(2.0) * self.step_norm * self.step_norm
    }
}

/// Sweeps of one homotopy stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport<T> {
    /// Stage parameter `s_k^j`.
    pub param: Vec<T>,
    pub sweeps: Vec<SweepReport<T>>,
}

/// Output of a tracking step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackStepResult<T> {
    pub w_out: PrimalDual<T>,
    /// One entry per homotopy stage.
    pub stages: Vec<StageReport<T>>,
    /// Multiplier used by the final primal loop (before the last dual update).
    pub sweep_mu: Vec<T>,
}

impl<T: Real> TrackStepResult<T> {
    pub fn sweeps(&self) -> impl Iterator<Item = &SweepReport<T>> {
        self.stages.iter().flat_map(|s| s.sweeps.iter())
    }

    pub fn sweep_count(&self) -> usize {
        self.stages.iter().map(|s| s.sweeps.len()).sum()
    }
}

/// `μ⁺ = μ + ρ G(z, s)`
pub fn dual_update<T: Real>(nlp: &BlockNlp<T>, z: &[T], mu: &[T], s: &[T], rho: T) -> Result<Vec<T>> {
    let g = nlp.constraints(z, s)?;
    if mu.len() != g.len() {
        return Err(Error::dim("mu", g.len(), mu.len()));
    }
    Ok(mu.iter().zip(&g).map(|(&m, &gi)| m + rho * gi).collect())
}

/// Backtracking proximal gradient step on block `i` from the full point `z`.
///
/// Starting from `c`, candidates `π_{Z_i}(z_i − ∇_i L / c)` are tried for
/// `c, βc, β²c, …` until
/// `L(z_i⁺) + (α_i/2)‖z_i⁺ − z_i‖² ≤ L(z_i) + ∇_i Lᵀ(z_i⁺ − z_i) + (c/2)‖z_i⁺ − z_i‖²`.
/// On success `c` holds the accepted curvature.
pub fn bck_min<T: Real>(
    nlp: &BlockNlp<T>,
    i: usize,
    z: &[T],
    mu: &[T],
    s: &[T],
    cfg: &SolverConfig<T>,
    c: &mut T,
) -> Result<BlockStep<T>> {
    cfg.validate(nlp.n_groups())?;
    if i >= nlp.n_blocks() {
        return Err(Error::InvalidProblem(format!("block index {i} out of range")));
    }
    if !(*c > T::zero()) {
        return Err(Error::config("c", "curvature must be positive"));
    }
    let value = nlp.aug_lagrangian(z, mu, s, cfg.rho)?;
    let step = block_step(nlp, i, z, value, mu, s, cfg, *c)?;
    *c = step.curvature;
    Ok(step)
}

#[allow(clippy::too_many_arguments)]
fn block_step<T: Real>(
    nlp: &BlockNlp<T>,
    i: usize,
    snapshot: &[T],
    value: T,
    mu: &[T],
    s: &[T],
    cfg: &SolverConfig<T>,
    c_start: T,
) -> Result<BlockStep<T>> {
    let spec = &nlp.blocks()[i];
    let range = spec.range();
    let zi = &snapshot[range.clone()];
    let lower = spec.bounds.lower();
    let upper = spec.bounds.upper();
    let alpha = cfg.alpha_for_group(spec.group);
    let half = T::lit(0.5);
    // Rounding allowance on the acceptance test, far below any meaningful
    // decrease but above the noise of evaluating L twice.
    let allowance = T::lit(4.0) * T::epsilon() * value.abs().max(T::one());

    let mut grad = vec![T::zero(); spec.dim];
    nlp.grad_block_into(i, snapshot, mu, s, cfg.rho, &mut grad);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite {
            term: format!("gradient of block {i}"),
        });
    }

    let mut grad_trial = vec![T::zero(); spec.dim];
    let mut trial = snapshot.to_vec();
    let mut g_buf = vec![T::zero(); nlp.n_constraints()];
    let mut c = c_start;
    let mut backtracks = 0;
    loop {
        let mut d_sq = T::zero();
        let mut lin = T::zero();
        for k in 0..spec.dim {
            let cand = crate::scalar::clamp(zi[k] - grad[k] / c, lower[k], upper[k]);
            trial[range.start + k] = cand;
            let d = cand - zi[k];
            d_sq += d * d;
            lin += grad[k] * d;
        }
        if d_sq == T::zero() {
            // Prox fixed point: nothing to test.
            return Ok(BlockStep {
                z_block: zi.to_vec(),
                curvature: c,
                backtracks,
            });
        }
        let model = value + lin + half * c * d_sq;
        let trial_value = nlp.aug_lagrangian_with(&trial, mu, s, cfg.rho, &mut g_buf);
        if let Ok(v) = trial_value {
            let excess = v + half * alpha * d_sq - model;
            let accept = if excess <= -allowance {
                true
            } else if excess > allowance {
                false
            } else {
                // Inside the noise band the value test cannot tell an
                // overshoot from a good step. Use the trapezoidal form
                // L(z+d) - L(z) - g'd ~ (g(z+d) - g)'d / 2 instead, which is
                // exact on quadratics and free of cancellation.
                nlp.grad_block_into(i, &trial, mu, s, cfg.rho, &mut grad_trial);
                let mut curv = T::zero();
                for k in 0..spec.dim {
                    curv += (grad_trial[k] - grad[k]) * (trial[range.start + k] - zi[k]);
                }
                curv.is_finite() && half * curv + half * alpha * d_sq <= half * c * d_sq
            };
            if accept {
                return Ok(BlockStep {
                    z_block: trial[range].to_vec(),
                    curvature: c,
                    backtracks,
                });
            }
        }
        c *= cfg.beta;
        backtracks += 1;
        if c > cfg.c_max {
            return Err(Error::CurvatureOverflow {
                block: i,
                curvature: c.as_f64(),
                cap: cfg.c_max.as_f64(),
            });
        }
    }
}

/// Stateful driver holding the per-block curvature memory between calls.
#[derive(Debug, Clone)]
pub struct SplittingSolver<'a, T: Real> {
    nlp: &'a BlockNlp<T>,
    cfg: SolverConfig<T>,
    curvature: Vec<T>,
}

impl<'a, T: Real> SplittingSolver<'a, T> {
    pub fn new(nlp: &'a BlockNlp<T>, cfg: SolverConfig<T>) -> Result<Self> {
        cfg.validate(nlp.n_groups())?;
        let curvature = vec![cfg.c_init; nlp.n_blocks()];
        Ok(Self { nlp, cfg, curvature })
    }

    pub fn nlp(&self) -> &'a BlockNlp<T> {
        self.nlp
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.cfg
    }

    pub fn curvature(&self) -> &[T] {
        &self.curvature
    }

    pub fn reset_curvature(&mut self) {
        self.curvature.iter_mut().for_each(|c| *c = self.cfg.c_init);
    }

    /// `sweeps` Gauss-Seidel passes over the groups in order; the blocks of a
    /// group all read the same frozen snapshot, so sequential and parallel
    /// execution give identical iterates.
    pub fn primal_sweeps(
        &mut self,
        z0: &[T],
        mu: &[T],
        s: &[T],
        sweeps: usize,
    ) -> Result<(Vec<T>, Vec<SweepReport<T>>)> {
        let nlp = self.nlp;
        let rho = self.cfg.rho;
        if !nlp.bounds().contains(z0) {
            return Err(Error::Domain("primal sweeps need a starting point inside the box".into()));
        }
        let mut z = z0.to_vec();
        let mut reports = Vec::with_capacity(sweeps);
        if sweeps == 0 {
            return Ok((z, reports));
        }
        let mut g_buf = vec![T::zero(); nlp.n_constraints()];
        let mut value = nlp.aug_lagrangian(&z, mu, s, rho)?;
        for _ in 0..sweeps {
            let floor = T::lit(C_FLOOR);
            match self.cfg.curvature {
                CurvatureMemory::Reset => self.curvature.iter_mut().for_each(|c| *c = self.cfg.c_init),
                CurvatureMemory::Carry => {}
                CurvatureMemory::CarryWithDecay => {
                    let beta = self.cfg.beta;
                    self.curvature.iter_mut().for_each(|c| *c = (*c / beta).max(floor));
                }
            }
            let start = z.clone();
            let value_before = value;
            let mut backtracks = vec![0; nlp.n_blocks()];
            for (gi, group) in nlp.groups().iter().enumerate() {
                if gi > 0 {
                    value = nlp.aug_lagrangian_with(&z, mu, s, rho, &mut g_buf)?;
                }
                let snapshot = &z;
                let cfg = &self.cfg;
                let curv = &self.curvature;
                let steps: Vec<Result<BlockStep<T>>> = if cfg.parallel && group.len() > 1 {
                    group
                        .par_iter()
                        .map(|&b| block_step(nlp, b, snapshot, value, mu, s, cfg, curv[b]))
                        .collect()
                } else {
                    group
                        .iter()
                        .map(|&b| block_step(nlp, b, snapshot, value, mu, s, cfg, curv[b]))
                        .collect()
                };
                let mut updated = z.clone();
                for (&b, step) in group.iter().zip(steps) {
                    let step = step?;
                    updated[nlp.blocks()[b].range()].copy_from_slice(&step.z_block);
                    self.curvature[b] = step.curvature;
                    backtracks[b] = step.backtracks;
                }
                z = updated;
            }
            value = nlp.aug_lagrangian_with(&z, mu, s, rho, &mut g_buf)?;
            reports.push(SweepReport {
                value_before,
                value_after: value,
                step_norm: dist2(&start, &z),
                curvatures: self.curvature.clone(),
                backtracks,
                group_calls: nlp.n_groups(),
            });
        }
        Ok((z, reports))
    }

    /// One tracking step: `M` primal sweeps at `s_next` warm-started at
    /// `w.z` with the multiplier held at `w.mu`, then one dual update.
    pub fn track_step(&mut self, w: &PrimalDual<T>, s_next: &[T]) -> Result<TrackStepResult<T>> {
        w.check(self.nlp)?;
        self.nlp.check_param(s_next)?;
        let (z, sweeps) = self.primal_sweeps(&w.z, &w.mu, s_next, self.cfg.sweeps)?;
        let mu = dual_update(self.nlp, &z, &w.mu, s_next, self.cfg.rho)?;
        Ok(TrackStepResult {
            w_out: PrimalDual::new(z, mu),
            stages: vec![StageReport {
                param: s_next.to_vec(),
                sweeps,
            }],
            sweep_mu: w.mu.clone(),
        })
    }

    /// Homotopy tracking step: the jump `s_prev → s_next` is split into `D`
    /// stages `s^j = (1 − j/D) s_prev + (j/D) s_next`, each with its own
    /// primal loop and dual update. The sweep budget is shared across stages.
    pub fn track_step_homotopy(
        &mut self,
        w: &PrimalDual<T>,
        s_prev: &[T],
        s_next: &[T],
    ) -> Result<TrackStepResult<T>> {
        w.check(self.nlp)?;
        self.nlp.check_param(s_prev)?;
        self.nlp.check_param(s_next)?;
        let d = self.cfg.stages;
        let d_t = T::from_usize_lossy(d);
        let mut z = w.z.clone();
        let mut mu = w.mu.clone();
        let mut sweep_mu = mu.clone();
        let mut stages = Vec::with_capacity(d);
        for j in 1..=d {
            let tau = T::from_usize_lossy(j) / d_t;
            let s: Vec<T> = s_prev
                .iter()
                .zip(s_next)
                .map(|(&a, &b)| (T::one() - tau) * a + tau * b)
                .collect();
            let (zj, sweeps) = self.primal_sweeps(&z, &mu, &s, self.cfg.stage_sweeps(j))?;
            z = zj;
            sweep_mu = mu.clone();
            mu = dual_update(self.nlp, &z, &mu, &s, self.cfg.rho)?;
            stages.push(StageReport { param: s, sweeps });
        }
        Ok(TrackStepResult {
            w_out: PrimalDual::new(z, mu),
            stages,
            sweep_mu,
        })
    }

    /// Plain step for `D = 1`, homotopy otherwise.
    pub fn advance(&mut self, w: &PrimalDual<T>, s_prev: &[T], s_next: &[T]) -> Result<TrackStepResult<T>> {
        if self.cfg.stages == 1 {
            self.track_step(w, s_next)
        } else {
            self.track_step_homotopy(w, s_prev, s_next)
        }
    }
}

/// One-shot primal sweeps with a fresh curvature memory (`cfg.sweeps` passes).
pub fn primal_sweeps<T: Real>(
    nlp: &BlockNlp<T>,
    z0: &[T],
    mu: &[T],
    s: &[T],
    cfg: &SolverConfig<T>,
) -> Result<(Vec<T>, Vec<SweepReport<T>>)> {
    SplittingSolver::new(nlp, cfg.clone())?.primal_sweeps(z0, mu, s, cfg.sweeps)
}

/// Residual certificate of a completed sweep: block components
/// `c_i (z_i^(l) − z_i^(l+1)) + ∇_i L(z^(l+1)) − ∇_i L(snapshot_i)`, where
/// `snapshot_i` is the point the block's gradient step was taken from.
/// The vector `r` satisfies `r − ∇L(z^(l+1)) ∈ N_Z(z^(l+1))`.
pub fn relative_error_residual<T: Real>(
    nlp: &BlockNlp<T>,
    z_prev: &[T],
    z_next: &[T],
    curvatures: &[T],
    mu: &[T],
    s: &[T],
    rho: T,
) -> Result<Vec<T>> {
    let mut r = vec![T::zero(); nlp.n_z()];
    let mut snapshot = z_prev.to_vec();
    for group in nlp.groups() {
        for &b in group {
            let range = nlp.blocks()[b].range();
            let g_snap = nlp.grad_block(b, &snapshot, mu, s, rho)?;
            let g_next = nlp.grad_block(b, z_next, mu, s, rho)?;
            for (k, j) in range.clone().enumerate() {
                r[j] = curvatures[b] * (z_prev[j] - z_next[j]) + g_next[k] - g_snap[k];
            }
        }
        for &b in group {
            let range = nlp.blocks()[b].range();
            snapshot[range.clone()].copy_from_slice(&z_next[range]);
        }
    }
    Ok(r)
}

/// `‖π_Z(z − t(∇L(z) − r)) − z‖₂`; zero when `r − ∇L(z)` lies in the normal cone.
pub fn certificate_defect<T: Real>(
    nlp: &BlockNlp<T>,
    z: &[T],
    r: &[T],
    mu: &[T],
    s: &[T],
    rho: T,
    t: T,
) -> Result<T> {
    let g = nlp.grad_aug_lagrangian(z, mu, s, rho)?;
    let x: Vec<T> = z
        .iter()
        .zip(g.iter().zip(r))
        .map(|(&zj, (&gj, &rj))| zj - t * (gj - rj))
        .collect();
    let p = nlp.bounds().project(&x)?;
    Ok(dist2(&p, z))
}
