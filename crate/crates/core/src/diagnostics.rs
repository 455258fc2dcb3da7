//! Measurable quantities: KKT residual, feasibility, Łojasiewicz and rate
//! exponents, Lipschitz aggregates, contraction coefficients and the
//! optimality tracking error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{dist2, norm2, DenseMatrix};
use crate::problem::BlockNlp;
use crate::scalar::{clamp, Real};

/// `ω = ‖π_Z(z − ∇_z L_ρ(z, μ, s)) − z‖₂`, the projected gradient residual
/// with unit step.
pub fn kkt_residual<T: Real>(nlp: &BlockNlp<T>, z: &[T], mu: &[T], s: &[T], rho: T) -> Result<T> {
    let g = nlp.grad_aug_lagrangian(z, mu, s, rho)?;
    let lower = nlp.bounds().lower();
    let upper = nlp.bounds().upper();
    Ok(z.iter()
        .zip(&g)
        .zip(lower.iter().zip(upper))
        .map(|((&zj, &gj), (&l, &u))| {
            let d = clamp(zj - gj, l, u) - zj;
            d * d
        })
        .sum::<T>()
        .sqrt())
}

/// `‖G(z, s)‖₂`
pub fn feasibility_norm<T: Real>(nlp: &BlockNlp<T>, z: &[T], s: &[T]) -> Result<T> {
    Ok(norm2(&nlp.constraints(z, s)?))
}

fn exponent_base(d: u32, n: u32) -> Result<f64> {
    if d < 2 || n < 2 {
        return Err(Error::Domain(format!("exponents need d, n >= 2 (got d = {d}, n = {n})")));
    }
    Ok(f64::from(d) * (3.0 * f64::from(d) - 3.0).powi(n as i32 - 1))
}

/// Łojasiewicz exponent of a degree-`d` polynomial in `n` variables,
/// `θ(d, n) = 1 − 1/(d (3d − 3)^{n−1})`.
pub fn lojasiewicz_theta(d: u32, n: u32) -> Result<f64> {
    Ok(1.0 - 1.0 / exponent_base(d, n)?)
}

/// Sub-linear rate exponent `ψ(d, n) = 1/(d (3d − 3)^{n−1} − 2)`.
pub fn rate_psi(d: u32, n: u32) -> Result<f64> {
    Ok(1.0 / (exponent_base(d, n)? - 2.0))
}

/// `λ_F = P · max_i ‖T_i‖₂`, where `T_i` stacks the parameter maps of all
/// blocks in group `i`.
pub fn lambda_f<T: Real>(nlp: &BlockNlp<T>) -> T {
    let p = nlp.param_dim();
    let mut worst = T::zero();
    for group in nlp.groups() {
        let mut rows = Vec::new();
        let mut n_rows = 0;
        for &b in group {
            if let Some(t) = nlp.t_matrix(b) {
                for r in 0..t.rows() {
                    rows.extend_from_slice(t.row(r));
                }
                n_rows += t.rows();
            }
        }
        if n_rows == 0 || p == 0 {
            continue;
        }
        let stacked = DenseMatrix::from_row_major(n_rows, p, rows).expect("consistent T layout");
        worst = worst.max(stacked.spectral_norm(T::lit(1e-10), 10_000));
    }
    let value = T::from_usize_lossy(nlp.n_groups()) * worst;
    if value == T::zero() {
        log::warn!("lambda_F = 0: the program does not depend on its parameter");
    }
    value
}

/// `λ_H = sqrt(max(λ_F², 1) + λ_F)`
pub fn lambda_h<T: Real>(lambda_f: T) -> T {
    ((lambda_f * lambda_f).max(T::one()) + lambda_f).sqrt()
}

/// Where the Lipschitz constant of `G(·, s)` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LambdaGSource {
    UserSupplied,
    /// Maximum of sampled Jacobian norms: a heuristic lower estimate.
    SampledLowerEstimate,
}

/// Constants of the weak contraction estimate. Only `λ_F` and `λ_H` can be
/// computed from the program; the others are user inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionConstants<T> {
    pub lambda_a: T,
    pub lambda_b: T,
    pub lambda_g: T,
    pub c: T,
    pub lambda_f: T,
    pub lambda_h: T,
    pub d_l: u32,
    pub n_z: u32,
    pub lambda_g_source: LambdaGSource,
    /// Set when the values are unit placeholders, not problem data.
    pub illustrative: bool,
}

impl<T: Real> Default for ContractionConstants<T> {
    fn default() -> Self {
        Self {
            lambda_a: T::one(),
            lambda_b: T::one(),
            lambda_g: T::one(),
            c: T::one(),
            lambda_f: T::one(),
            lambda_h: T::one(),
            d_l: 2,
            n_z: 2,
            lambda_g_source: LambdaGSource::UserSupplied,
            illustrative: true,
        }
    }
}

impl<T: Real> ContractionConstants<T> {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("lambda_A", self.lambda_a),
            ("lambda_B", self.lambda_b),
            ("lambda_G", self.lambda_g),
            ("C", self.c),
            ("lambda_F", self.lambda_f),
            ("lambda_H", self.lambda_h),
        ];
        for (name, v) in named {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::config(name, "must be positive and finite"));
            }
        }
        if self.d_l < 2 || self.n_z < 2 {
            return Err(Error::config("d_L/n_z", "must be at least 2"));
        }
        Ok(())
    }
}

/// Contraction coefficients `(β_w, β_s)` for penalty `ρ` and `M` sweeps:
///
/// ```text
/// β_w = C(1 + ρλ_G)(1 + λ_Bλ_H/ρ) M^{−ψ} + λ_Bλ_H/ρ
/// β_s = C(1 + ρλ_G) λ_Bλ_H M^{−ψ} + λ_Bλ_Hλ_Aλ_F/ρ
/// ```
///
/// with `ψ = ψ(d_L, n_z)`. Diagnostic only; never gates the solver.
pub fn beta_coeffs<T: Real>(k: &ContractionConstants<T>, rho: T, sweeps: usize) -> Result<(T, T)> {
    k.validate()?;
    if !(rho > T::zero()) {
        return Err(Error::config("rho", "must be positive"));
    }
    if sweeps == 0 {
        return Err(Error::config("M", "must be at least 1"));
    }
    let psi = T::lit(rate_psi(k.d_l, k.n_z)?);
    let decay = T::from_usize_lossy(sweeps).powf(-psi);
    let bh = k.lambda_b * k.lambda_h;
    let growth = k.c * (T::one() + rho * k.lambda_g);
    let beta_w = growth * (T::one() + bh / rho) * decay + bh / rho;
    let beta_s = growth * bh * decay + bh * k.lambda_a * k.lambda_f / rho;
    Ok((beta_w, beta_s))
}

/// Coefficients of the homotopy variant with `D` stages:
/// `(β_w^D, β_s Σ_{i<D} β_w^i / D)`.
pub fn homotopy_coeffs<T: Real>(beta_w: T, beta_s: T, stages: usize) -> Result<(T, T)> {
    if stages == 0 {
        return Err(Error::config("D", "must be at least 1"));
    }
    let mut sum = T::zero();
    let mut pow = T::one();
    for _ in 0..stages {
        sum += pow;
        pow *= beta_w;
    }
    Ok((pow, beta_s * sum / T::from_usize_lossy(stages)))
}

/// Heuristic lower estimate of the Lipschitz constant of `G(·, s)` over `Z`:
/// the largest Jacobian spectral norm seen at `samples` uniform points.
/// The Jacobian action is taken by central differences, its transpose exactly.
pub fn estimate_lambda_g<T: Real>(nlp: &BlockNlp<T>, s: &[T], samples: usize, seed: u64) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lower = nlp.bounds().lower();
    let upper = nlp.bounds().upper();
    let n = nlp.n_z();
    let mut best = T::zero();
    for _ in 0..samples {
        let z: Vec<T> = (0..n)
            .map(|j| {
                let u = T::lit(rng.random::<f64>());
                lower[j] + u * (upper[j] - lower[j])
            })
            .collect();
        let mut v: Vec<T> = (0..n).map(|_| T::lit(rng.random::<f64>() - 0.5)).collect();
        let mut sigma = T::zero();
        for _ in 0..20 {
            let nv = norm2(&v);
            if nv == T::zero() {
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let jv = jacobian_action_fd(nlp, &z, s, &v)?;
            sigma = norm2(&jv);
            v = nlp.constraint_jacobian_t_mul(&z, &jv)?;
        }
        best = best.max(sigma);
    }
    Ok(best)
}

fn jacobian_action_fd<T: Real>(nlp: &BlockNlp<T>, z: &[T], s: &[T], v: &[T]) -> Result<Vec<T>> {
    let h = T::lit(1e-6);
    let zp: Vec<T> = z.iter().zip(v).map(|(&a, &b)| a + h * b).collect();
    let zm: Vec<T> = z.iter().zip(v).map(|(&a, &b)| a - h * b).collect();
    let gp = nlp.constraints(&zp, s)?;
    let gm = nlp.constraints(&zm, s)?;
    Ok(gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / (h + h)).collect())
}

/// Root-mean-square gap `E = sqrt((1/N) Σ (y*_k − ȳ_k)²)`.
pub fn tracking_error<T: Real>(y_star: &[T], y_bar: &[T]) -> Result<T> {
    if y_star.len() != y_bar.len() {
        return Err(Error::dim("tracking error sequences", y_star.len(), y_bar.len()));
    }
    if y_star.is_empty() {
        return Err(Error::Domain("tracking error needs at least one sample".into()));
    }
    Ok(dist2(y_star, y_bar) / T::from_usize_lossy(y_star.len()).sqrt())
}
