//! Full-accuracy reference solver: an augmented Lagrangian outer loop whose
//! bound-constrained subproblems are solved to a shrinking tolerance.
//!
//! The default inner method is a projected Newton iteration with a
//! finite-difference Hessian of the analytic gradient. Primal sweeps are
//! available as the inner method too, but at the conditioning of the NMPC
//! programs they need tens of thousands of passes per subproblem.

use crate::diagnostics::{feasibility_norm, kkt_residual};
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_shifted_spd, DenseMatrix};
use crate::problem::{BlockNlp, PrimalDual};
use crate::scalar::{clamp, Real};

use super::config::SolverConfig;
use super::splitting::{dual_update, SplittingSolver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InnerMethod {
    #[default]
    ProjectedNewton,
    Sweeps,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleOptions<T> {
    pub tol: T,
    pub max_rounds: usize,
    pub inner: InnerMethod,
    /// Iteration cap of one subproblem (Newton steps or sweeps).
    pub max_inner_iters: usize,
    /// Multiply `ρ` by 10 when `‖G‖` fails to halve over a round.
    pub escalate_rho: bool,
    pub rho_max: T,
}

impl<T: Real> OracleOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            max_rounds: 500,
            inner: InnerMethod::default(),
            max_inner_iters: 200,
            escalate_rho: true,
            rho_max: T::lit(1e6),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution<T> {
    pub w: PrimalDual<T>,
    /// Outer rounds performed (0 if the input already met the tolerance).
    pub rounds: usize,
    /// Penalty in force at termination.
    pub rho: T,
    /// KKT residual of the last subproblem.
    pub omega: T,
    /// Multiplier the last subproblem was solved with (before the final
    /// dual update); `omega` is measured against it.
    pub subproblem_mu: Vec<T>,
    pub feasibility: T,
    pub inner_iters: usize,
}

/// Solves the NLP at parameter `s` to `ω ≤ tol` and `‖G‖₂ ≤ tol`.
pub fn full_solve<T: Real>(
    nlp: &BlockNlp<T>,
    w_init: &PrimalDual<T>,
    s: &[T],
    rho: T,
    tol: T,
) -> Result<OracleSolution<T>> {
    full_solve_with(nlp, w_init, s, rho, &OracleOptions::with_tol(tol))
}

pub fn full_solve_with<T: Real>(
    nlp: &BlockNlp<T>,
    w_init: &PrimalDual<T>,
    s: &[T],
    rho: T,
    opts: &OracleOptions<T>,
) -> Result<OracleSolution<T>> {
    if !(opts.tol > T::zero()) {
        return Err(Error::config("tol", "must be positive"));
    }
    if !(rho > T::zero()) {
        return Err(Error::config("rho", "must be positive"));
    }
    w_init.check(nlp)?;
    nlp.check_param(s)?;

    let mut z = nlp.bounds().project(&w_init.z)?;
    let mut mu = w_init.mu.clone();
    let mut rho = rho;
    let tol = opts.tol;

    let mut omega = kkt_residual(nlp, &z, &mu, s, rho)?;
    let mut feas = feasibility_norm(nlp, &z, s)?;
    if omega <= tol && feas <= tol {
        return Ok(OracleSolution {
            subproblem_mu: mu.clone(),
            w: PrimalDual::new(z, mu),
            rounds: 0,
            rho,
            omega,
            feasibility: feas,
            inner_iters: 0,
        });
    }

    let mut inner_total = 0;
    for round in 1..=opts.max_rounds {
        let inner_tol = (T::lit(0.1) * feas).max(tol);
        let (zn, iters) = match opts.inner {
            InnerMethod::ProjectedNewton => {
                minimize_box_newton(nlp, &z, &mu, s, rho, inner_tol, opts.max_inner_iters)?
            }
            InnerMethod::Sweeps => {
                minimize_box_sweeps(nlp, &z, &mu, s, rho, inner_tol, opts.max_inner_iters)?
            }
        };
        z = zn;
        inner_total += iters;
        omega = kkt_residual(nlp, &z, &mu, s, rho)?;
        let subproblem_mu = mu;
        mu = dual_update(nlp, &z, &subproblem_mu, s, rho)?;
        let prev = feas;
        feas = feasibility_norm(nlp, &z, s)?;
        log::trace!("oracle round {round}: omega {:e} feas {:e} rho {rho}", omega.as_f64(), feas.as_f64());
        if omega <= tol && feas <= tol {
            return Ok(OracleSolution {
                subproblem_mu,
                w: PrimalDual::new(z, mu),
                rounds: round,
                rho,
                omega,
                feasibility: feas,
                inner_iters: inner_total,
            });
        }
        if opts.escalate_rho && feas > T::lit(0.5) * prev && feas > tol && rho * T::lit(10.0) <= opts.rho_max {
            rho *= T::lit(10.0);
        }
    }
    Err(Error::NoConvergence {
        rounds: opts.max_rounds,
        omega: omega.as_f64(),
        feasibility: feas.as_f64(),
    })
}

fn minimize_box_sweeps<T: Real>(
    nlp: &BlockNlp<T>,
    z0: &[T],
    mu: &[T],
    s: &[T],
    rho: T,
    tol: T,
    max_sweeps: usize,
) -> Result<(Vec<T>, usize)> {
    const CHUNK: usize = 50;
    let cfg = SolverConfig {
        rho,
        sweeps: CHUNK,
        ..SolverConfig::default()
    };
    let mut solver = SplittingSolver::new(nlp, cfg)?;
    let mut z = z0.to_vec();
    let mut done = 0;
    while done < max_sweeps {
        if kkt_residual(nlp, &z, mu, s, rho)? <= tol {
            break;
        }
        let n = CHUNK.min(max_sweeps - done);
        z = solver.primal_sweeps(&z, mu, s, n)?.0;
        done += n;
    }
    Ok((z, done))
}

/// Projected Newton on `min_{z ∈ Z} L_ρ(z, μ, s)` with an ε-active set.
/// Falls back to a backtracking projected gradient step whenever the Newton
/// direction does not produce sufficient decrease.
pub(crate) fn minimize_box_newton<T: Real>(
    nlp: &BlockNlp<T>,
    z0: &[T],
    mu: &[T],
    s: &[T],
    rho: T,
    tol: T,
    max_iter: usize,
) -> Result<(Vec<T>, usize)> {
    let n = nlp.n_z();
    let lower = nlp.bounds().lower();
    let upper = nlp.bounds().upper();
    let sigma = T::lit(1e-4);
    let mut z = z0.to_vec();
    let mut g_buf = vec![T::zero(); nlp.n_constraints()];
    let mut grad = vec![T::zero(); n];
    let mut value = nlp.aug_lagrangian_with(&z, mu, s, rho, &mut g_buf)?;
    let mut pg_step = T::one();

    for it in 0..max_iter {
        nlp.grad_full_into(&z, mu, s, rho, &mut grad);
        let omega = projected_step_norm(&z, &grad, lower, upper);
        if omega <= tol {
            return Ok((z, it));
        }
        let eps = omega.min(T::lit(1e-3));
        let free: Vec<usize> = (0..n)
            .filter(|&j| {
                let at_lower = z[j] - lower[j] <= eps && grad[j] > T::zero();
                let at_upper = upper[j] - z[j] <= eps && grad[j] < T::zero();
                !(at_lower || at_upper)
            })
            .collect();

        let mut direction: Vec<T> = grad.iter().map(|&g| -g).collect();
        if !free.is_empty() {
            let h = newton_hessian(nlp, &z, mu, s, rho, &free)?;
            let rhs: Vec<T> = free.iter().map(|&j| -grad[j]).collect();
            if let Some((d_free, _)) = solve_shifted_spd(&h, &rhs) {
                for (k, &j) in free.iter().enumerate() {
                    direction[j] = d_free[k];
                }
                // Active coordinates get a diagonally scaled gradient step.
                let scale = (0..free.len()).fold(T::zero(), |m, k| m.max(h[(k, k)])).max(T::one());
                let mut is_free = vec![false; n];
                free.iter().for_each(|&j| is_free[j] = true);
                for j in 0..n {
                    if !is_free[j] {
                        direction[j] = -grad[j] / scale;
                    }
                }
            }
        }

        let mut accepted = false;
        let mut alpha = T::one();
        let mut trial = vec![T::zero(); n];
        for _ in 0..40 {
            for j in 0..n {
                trial[j] = clamp(z[j] + alpha * direction[j], lower[j], upper[j]);
            }
            let decrease: T = grad.iter().zip(trial.iter().zip(&z)).map(|(&g, (&t, &zj))| g * (t - zj)).sum();
            if decrease < T::zero() {
                if let Ok(v) = nlp.aug_lagrangian_with(&trial, mu, s, rho, &mut g_buf) {
                    if v <= value + sigma * decrease {
                        z.copy_from_slice(&trial);
                        value = v;
                        accepted = true;
                        break;
                    }
                }
            }
            alpha *= T::lit(0.5);
        }
        if !accepted {
            // Near the solution the Armijo decrease drops below the rounding
            // level of L; take the full Newton step if it halves ω.
            for j in 0..n {
                trial[j] = clamp(z[j] + direction[j], lower[j], upper[j]);
            }
            let noise = T::lit(100.0) * T::epsilon() * value.abs().max(T::one());
            if let Ok(v) = nlp.aug_lagrangian_with(&trial, mu, s, rho, &mut g_buf) {
                if v <= value + noise {
                    let mut g_trial = vec![T::zero(); n];
                    nlp.grad_full_into(&trial, mu, s, rho, &mut g_trial);
                    if projected_step_norm(&trial, &g_trial, lower, upper) <= T::lit(0.5) * omega {
                        z.copy_from_slice(&trial);
                        value = v;
                        accepted = true;
                    }
                }
            }
        }
        if accepted {
            continue;
        }

        // Projected gradient fallback with curvature backtracking.
        let mut c = (T::one() / pg_step).max(T::lit(1e-8));
        let mut moved = false;
        for _ in 0..200 {
            for j in 0..n {
                trial[j] = clamp(z[j] - grad[j] / c, lower[j], upper[j]);
            }
            let d: Vec<T> = trial.iter().zip(&z).map(|(&t, &zj)| t - zj).collect();
            let d_sq = dot(&d, &d);
            if d_sq == T::zero() {
                break;
            }
            if let Ok(v) = nlp.aug_lagrangian_with(&trial, mu, s, rho, &mut g_buf) {
                if v <= value + dot(&grad, &d) + c / T::lit(2.0) * d_sq && v < value {
                    z.copy_from_slice(&trial);
                    value = v;
                    pg_step = T::lit(2.0) / c;
                    moved = true;
                    break;
                }
            }
            c *= T::lit(2.0);
        }
        if !moved {
            // Rounding floor: no representable decrease left.
            return Ok((z, it + 1));
        }
    }
    Ok((z, max_iter))
}

fn projected_step_norm<T: Real>(z: &[T], grad: &[T], lower: &[T], upper: &[T]) -> T {
    z.iter()
        .zip(grad)
        .zip(lower.iter().zip(upper))
        .map(|((&zj, &gj), (&l, &u))| {
            let d = clamp(zj - gj, l, u) - zj;
            d * d
        })
        .sum::<T>()
        .sqrt()
}

/// Hessian of `L_ρ` restricted to `free`: the Lagrangian part at the fixed
/// multiplier `y = μ + ρG` by forward differences of its gradient, plus the
/// exact `ρ JᵀJ`. Differencing the full gradient instead loses every digit
/// once `ρ` is large.
fn newton_hessian<T: Real>(
    nlp: &BlockNlp<T>,
    z: &[T],
    mu: &[T],
    s: &[T],
    rho: T,
    free: &[usize],
) -> Result<DenseMatrix<T>> {
    let n = nlp.n_z();
    let m = free.len();
    let rows = nlp.n_constraints();
    let mut y = vec![T::zero(); rows];
    nlp.constraints_into(z, s, &mut y);
    for (v, &mj) in y.iter_mut().zip(mu) {
        *v = mj + rho * *v;
    }
    let mut base = vec![T::zero(); n];
    nlp.grad_full_into(z, &y, s, T::zero(), &mut base);

    let root_eps = T::epsilon().sqrt();
    let mut h = DenseMatrix::zeros(m, m);
    let mut zp = z.to_vec();
    let mut gp = vec![T::zero(); n];
    for (col, &j) in free.iter().enumerate() {
        let step = root_eps * (T::one() + z[j].abs());
        zp[j] = z[j] + step;
        nlp.grad_full_into(&zp, &y, s, T::zero(), &mut gp);
        zp[j] = z[j];
        for (row, &i) in free.iter().enumerate() {
            h[(row, col)] = (gp[i] - base[i]) / step;
        }
    }
    for a in 0..m {
        for b in (a + 1)..m {
            let v = (h[(a, b)] + h[(b, a)]) / T::lit(2.0);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }

    let mut e = vec![T::zero(); rows];
    for r in 0..rows {
        e[r] = T::one();
        let jrow = nlp.constraint_jacobian_t_mul(z, &e)?;
        e[r] = T::zero();
        let nz: Vec<(usize, T)> = free
            .iter()
            .enumerate()
            .filter_map(|(k, &j)| (jrow[j] != T::zero()).then_some((k, jrow[j])))
            .collect();
        for &(a, va) in &nz {
            for &(b, vb) in &nz {
                h[(a, b)] += rho * va * vb;
            }
        }
    }
    Ok(h)
}
