//! Block-structured parametric NLP, its augmented Lagrangian and the
//! elementary evaluations every solver step relies on.
//!
//! The program has the form
//!
//! ```text
//! minimise   Σ_i J_i(z_i) + J_c(z)
//! s.t.       Q_c(z) = 0
//!            g_i(z_i) + T_i s = 0        for every block i
//!            z_i ∈ Z_i                   (bounded boxes)
//! ```
//!
//! with constraint functional `G(z, s) = (Q_c(z); g_1(z_1) + T_1 s; …)` and
//! augmented Lagrangian `L_ρ(z, μ, s) = J(z) + (μ + ρ/2 G(z, s))ᵀ G(z, s)`.
//! Blocks are assigned to groups; groups are swept in order and the blocks
//! of one group update in parallel.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::{norm_inf, DenseMatrix};
use crate::scalar::{clamp, Real};

/// Axis-aligned bounded box `[lower, upper]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet<T> {
    lower: Vec<T>,
    upper: Vec<T>,
}

impl<T: Real> BoxSet<T> {
    pub fn new(lower: Vec<T>, upper: Vec<T>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::dim("box upper bounds", lower.len(), upper.len()));
        }
        for (j, (&l, &u)) in lower.iter().zip(&upper).enumerate() {
            if !l.is_finite() || !u.is_finite() {
                return Err(Error::InvalidBox(format!("bound {j} is not finite")));
            }
            if l > u {
                return Err(Error::InvalidBox(format!("lower[{j}] = {l} > upper[{j}] = {u}")));
            }
        }
        Ok(Self { lower, upper })
    }

    /// Same interval repeated `n` times.
    pub fn uniform(n: usize, lower: T, upper: T) -> Result<Self> {
        Self::new(vec![lower; n], vec![upper; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn upper(&self) -> &[T] {
        &self.upper
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&l, &u))| l <= v && v <= u)
    }

    /// Euclidean projection (the proximal map of the box indicator).
    pub fn project(&self, x: &[T]) -> Result<Vec<T>> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out)?;
        Ok(out)
    }

    pub fn project_in_place(&self, x: &mut [T]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::dim("box projection", self.dim(), x.len()));
        }
        for (v, (&l, &u)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = clamp(*v, l, u);
        }
        Ok(())
    }

    fn concat(boxes: &[&BoxSet<T>]) -> Self {
        let lower = boxes.iter().flat_map(|b| b.lower.iter().copied()).collect();
        let upper = boxes.iter().flat_map(|b| b.upper.iter().copied()).collect();
        Self { lower, upper }
    }
}

/// Componentwise `median(lower, x, upper)`.
pub fn project_box<T: Real>(x: &[T], bounds: &BoxSet<T>) -> Result<Vec<T>> {
    bounds.project(x)
}

/// Smooth scalar function with gradient.
pub trait SmoothFn<T>: Send + Sync {
    fn value(&self, x: &[T]) -> T;
    /// Overwrites `grad` with `∇f(x)`.
    fn gradient(&self, x: &[T], grad: &mut [T]);
}

/// Smooth vector-valued map with a Jacobian-transpose action.
pub trait EqualityMap<T>: Send + Sync {
    fn out_dim(&self) -> usize;
    /// Overwrites `out` (length `out_dim`) with `g(x)`.
    fn eval(&self, x: &[T], out: &mut [T]);
    /// Overwrites `out` (length of `x`) with `∇g(x)ᵀ v`.
    fn jacobian_t_mul(&self, x: &[T], v: &[T], out: &mut [T]);
}

/// [`SmoothFn`] built from two closures.
pub struct FnSmooth<V, G> {
    value: V,
    grad: G,
}

pub fn smooth_fn<T, V, G>(value: V, grad: G) -> FnSmooth<V, G>
where
    V: Fn(&[T]) -> T + Send + Sync,
    G: Fn(&[T], &mut [T]) + Send + Sync,
{
    FnSmooth { value, grad }
}

impl<T, V, G> SmoothFn<T> for FnSmooth<V, G>
where
    V: Fn(&[T]) -> T + Send + Sync,
    G: Fn(&[T], &mut [T]) + Send + Sync,
{
    fn value(&self, x: &[T]) -> T {
        (self.value)(x)
    }
    fn gradient(&self, x: &[T], grad: &mut [T]) {
        (self.grad)(x, grad)
    }
}

/// [`EqualityMap`] built from two closures.
pub struct FnEquality<E, J> {
    out_dim: usize,
    eval: E,
    jt: J,
}

pub fn equality_fn<T, E, J>(out_dim: usize, eval: E, jt: J) -> FnEquality<E, J>
where
    E: Fn(&[T], &mut [T]) + Send + Sync,
    J: Fn(&[T], &[T], &mut [T]) + Send + Sync,
{
    FnEquality { out_dim, eval, jt }
}

impl<T, E, J> EqualityMap<T> for FnEquality<E, J>
where
    E: Fn(&[T], &mut [T]) + Send + Sync,
    J: Fn(&[T], &[T], &mut [T]) + Send + Sync,
{
    fn out_dim(&self) -> usize {
        self.out_dim
    }
    fn eval(&self, x: &[T], out: &mut [T]) {
        (self.eval)(x, out)
    }
    fn jacobian_t_mul(&self, x: &[T], v: &[T], out: &mut [T]) {
        (self.jt)(x, v, out)
    }
}

/// Separable weighted least squares `Σ_j w_j (x_j − c_j)²`.
#[derive(Debug, Clone)]
pub struct QuadraticCost<T> {
    weights: Vec<T>,
    center: Vec<T>,
}

impl<T: Real> QuadraticCost<T> {
    pub fn new(weights: Vec<T>, center: Vec<T>) -> Result<Self> {
        if weights.len() != center.len() {
            return Err(Error::dim("quadratic cost center", weights.len(), center.len()));
        }
        Ok(Self { weights, center })
    }
}

impl<T: Real> SmoothFn<T> for QuadraticCost<T> {
    fn value(&self, x: &[T]) -> T {
        x.iter()
            .zip(&self.weights)
            .zip(&self.center)
            .map(|((&xi, &w), &c)| w * (xi - c) * (xi - c))
            .sum()
    }
    fn gradient(&self, x: &[T], grad: &mut [T]) {
        let two = T::lit(2.0);
        for (((g, &xi), &w), &c) in grad.iter_mut().zip(x).zip(&self.weights).zip(&self.center) {
            *g = two * w * (xi - c);
        }
    }
}

/// Layout and bounds of one block of decision variables.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpec<T> {
    pub block_id: usize,
    pub dim: usize,
    pub bounds: BoxSet<T>,
    pub group: usize,
    /// Offset of the block inside the stacked `z`.
    pub offset: usize,
    /// Rows of `μ` (and of `G`) holding this block's local constraints.
    pub rows: Range<usize>,
}

impl<T> BlockSpec<T> {
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.dim
    }
}

struct LocalConstraint<T> {
    map: Box<dyn EqualityMap<T>>,
    t: DenseMatrix<T>,
}

/// Builder input for a single block.
pub struct Block<T> {
    bounds: BoxSet<T>,
    group: usize,
    cost: Option<Box<dyn SmoothFn<T>>>,
    local: Option<(Box<dyn EqualityMap<T>>, Option<DenseMatrix<T>>)>,
}

impl<T: Real> Block<T> {
    pub fn new(bounds: BoxSet<T>, group: usize) -> Self {
        Self {
            bounds,
            group,
            cost: None,
            local: None,
        }
    }

    pub fn cost(mut self, cost: impl SmoothFn<T> + 'static) -> Self {
        self.cost = Some(Box::new(cost));
        self
    }

    /// Local constraints `g_i(z_i) + T_i s = 0`. A missing `T_i` means zero.
    pub fn local_constraints(
        mut self,
        map: impl EqualityMap<T> + 'static,
        t: Option<DenseMatrix<T>>,
    ) -> Self {
        self.local = Some((Box::new(map), t));
        self
    }
}

pub struct BlockNlpBuilder<T> {
    param_dim: usize,
    degree_hint: u32,
    blocks: Vec<Block<T>>,
    coupling_cost: Option<Box<dyn SmoothFn<T>>>,
    coupling_constraints: Option<Box<dyn EqualityMap<T>>>,
}

impl<T: Real> BlockNlpBuilder<T> {
    pub fn block(mut self, block: Block<T>) -> Self {
        self.blocks.push(block);
        self
    }

    pub fn coupling_cost(mut self, cost: impl SmoothFn<T> + 'static) -> Self {
        self.coupling_cost = Some(Box::new(cost));
        self
    }

    pub fn coupling_constraints(mut self, map: impl EqualityMap<T> + 'static) -> Self {
        self.coupling_constraints = Some(Box::new(map));
        self
    }

    /// Degree of the augmented Lagrangian, used only by the rate diagnostics.
    pub fn degree_hint(mut self, d: u32) -> Self {
        self.degree_hint = d;
        self
    }

    pub fn build(self) -> Result<BlockNlp<T>> {
        if self.blocks.is_empty() {
            return Err(Error::InvalidProblem("no blocks".into()));
        }
        if self.degree_hint < 2 {
            return Err(Error::InvalidProblem("degree hint must be at least 2".into()));
        }
        let n_groups = self.blocks.iter().map(|b| b.group).max().unwrap_or(0) + 1;
        let mut groups = vec![Vec::new(); n_groups];
        let m = self.coupling_constraints.as_ref().map_or(0, |q| q.out_dim());

        let mut specs = Vec::with_capacity(self.blocks.len());
        let mut costs = Vec::with_capacity(self.blocks.len());
        let mut locals = Vec::with_capacity(self.blocks.len());
        let mut offset = 0;
        let mut row = m;
        for (id, b) in self.blocks.into_iter().enumerate() {
            let dim = b.bounds.dim();
            if dim == 0 {
                return Err(Error::InvalidProblem(format!("block {id} has dimension 0")));
            }
            let q = b.local.as_ref().map_or(0, |(g, _)| g.out_dim());
            let local = match b.local {
                None => None,
                Some((map, t)) => {
                    let t = t.unwrap_or_else(|| DenseMatrix::zeros(q, self.param_dim));
                    if t.rows() != q || t.cols() != self.param_dim {
                        return Err(Error::InvalidProblem(format!(
                            "T matrix of block {id} is {}x{}, expected {q}x{}",
                            t.rows(),
                            t.cols(),
                            self.param_dim
                        )));
                    }
                    Some(LocalConstraint { map, t })
                }
            };
            groups[b.group].push(id);
            specs.push(BlockSpec {
                block_id: id,
                dim,
                bounds: b.bounds,
                group: b.group,
                offset,
                rows: row..row + q,
            });
            costs.push(b.cost);
            locals.push(local);
            offset += dim;
            row += q;
        }
        if let Some(g) = groups.iter().position(|g| g.is_empty()) {
            return Err(Error::InvalidProblem(format!("group {g} has no blocks")));
        }
        let bounds = BoxSet::concat(&specs.iter().map(|s| &s.bounds).collect::<Vec<_>>());
        Ok(BlockNlp {
            blocks: specs,
            costs,
            locals,
            coupling_cost: self.coupling_cost,
            coupling_constraints: self.coupling_constraints,
            param_dim: self.param_dim,
            degree_hint: self.degree_hint,
            groups,
            n_z: offset,
            n_coupling: m,
            n_rows: row,
            bounds,
        })
    }
}

/// Block-structured parametric NLP. Immutable once built; all evaluations
/// are pure and may run concurrently.
pub struct BlockNlp<T> {
    blocks: Vec<BlockSpec<T>>,
    costs: Vec<Option<Box<dyn SmoothFn<T>>>>,
    locals: Vec<Option<LocalConstraint<T>>>,
    coupling_cost: Option<Box<dyn SmoothFn<T>>>,
    coupling_constraints: Option<Box<dyn EqualityMap<T>>>,
    param_dim: usize,
    degree_hint: u32,
    groups: Vec<Vec<usize>>,
    n_z: usize,
    n_coupling: usize,
    n_rows: usize,
    bounds: BoxSet<T>,
}

impl<T: Real> std::fmt::Debug for BlockNlp<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlockNlp")
            .field("n_z", &self.n_z)
            .field("n_rows", &self.n_rows)
            .field("n_coupling", &self.n_coupling)
            .field("param_dim", &self.param_dim)
            .field("groups", &self.groups)
            .finish()
    }
}

impl<T: Real> BlockNlp<T> {
    pub fn builder(param_dim: usize) -> BlockNlpBuilder<T> {
        BlockNlpBuilder {
            param_dim,
            degree_hint: 2,
            blocks: Vec::new(),
            coupling_cost: None,
            coupling_constraints: None,
        }
    }

    pub fn n_z(&self) -> usize {
        self.n_z
    }

    /// Total constraint dimension `m + Σ q_i`.
    pub fn n_constraints(&self) -> usize {
        self.n_rows
    }

    /// Dimension `m` of the coupling constraints `Q_c`.
    pub fn n_coupling_constraints(&self) -> usize {
        self.n_coupling
    }

    pub fn param_dim(&self) -> usize {
        self.param_dim
    }

    pub fn degree_hint(&self) -> u32 {
        self.degree_hint
    }

    pub fn blocks(&self) -> &[BlockSpec<T>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Sweep schedule: block indices of each group, in declaration order.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Bounds of the full stacked `z`.
    pub fn bounds(&self) -> &BoxSet<T> {
        &self.bounds
    }

    pub fn has_coupling_constraints(&self) -> bool {
        self.coupling_constraints.is_some()
    }

    /// `T_i` of a block, if it has local constraints.
    pub fn t_matrix(&self, block: usize) -> Option<&DenseMatrix<T>> {
        self.locals.get(block)?.as_ref().map(|l| &l.t)
    }

    fn check_z(&self, z: &[T]) -> Result<()> {
        if z.len() != self.n_z {
            return Err(Error::dim("z", self.n_z, z.len()));
        }
        Ok(())
    }

    fn check_mu(&self, mu: &[T]) -> Result<()> {
        if mu.len() != self.n_rows {
            return Err(Error::dim("mu", self.n_rows, mu.len()));
        }
        Ok(())
    }

    pub fn check_param(&self, s: &[T]) -> Result<()> {
        if s.len() != self.param_dim {
            return Err(Error::dim("parameter s", self.param_dim, s.len()));
        }
        Ok(())
    }

    fn check_block(&self, i: usize) -> Result<()> {
        if i >= self.blocks.len() {
            return Err(Error::InvalidProblem(format!(
                "block index {i} out of range (have {})",
                self.blocks.len()
            )));
        }
        Ok(())
    }

    /// `J(z) = Σ J_i(z_i) + J_c(z)`.
    pub fn cost(&self, z: &[T]) -> Result<T> {
        self.check_z(z)?;
        Ok(self.cost_unchecked(z))
    }

    fn cost_unchecked(&self, z: &[T]) -> T {
        let mut total = T::zero();
        for (spec, cost) in self.blocks.iter().zip(&self.costs) {
            if let Some(c) = cost {
                total += c.value(&z[spec.range()]);
            }
        }
        if let Some(c) = &self.coupling_cost {
            total += c.value(z);
        }
        total
    }

    /// Stacked `G(z, s)` in fixed block order.
    pub fn constraints(&self, z: &[T], s: &[T]) -> Result<Vec<T>> {
        self.check_z(z)?;
        self.check_param(s)?;
        let mut out = vec![T::zero(); self.n_rows];
        self.constraints_into(z, s, &mut out);
        Ok(out)
    }

    pub(crate) fn constraints_into(&self, z: &[T], s: &[T], out: &mut [T]) {
        if let Some(q) = &self.coupling_constraints {
            q.eval(z, &mut out[..self.n_coupling]);
        }
        for (spec, local) in self.blocks.iter().zip(&self.locals) {
            if let Some(l) = local {
                let rows = &mut out[spec.rows.clone()];
                l.map.eval(&z[spec.range()], rows);
                l.t.mul_vec_add(s, rows);
            }
        }
    }

    /// `L_ρ(z, μ, s) = J(z) + (μ + ρ/2 G)ᵀ G`.
    pub fn aug_lagrangian(&self, z: &[T], mu: &[T], s: &[T], rho: T) -> Result<T> {
        self.check_z(z)?;
        self.check_mu(mu)?;
        self.check_param(s)?;
        if !(rho > T::zero()) {
            return Err(Error::config("rho", "must be positive"));
        }
        let mut g = vec![T::zero(); self.n_rows];
        self.aug_lagrangian_with(z, mu, s, rho, &mut g)
    }

    pub(crate) fn aug_lagrangian_with(
        &self,
        z: &[T],
        mu: &[T],
        s: &[T],
        rho: T,
        g: &mut [T],
    ) -> Result<T> {
        let j = self.cost_unchecked(z);
        if !j.is_finite() {
            return Err(Error::NonFinite {
                term: "cost J(z)".into(),
            });
        }
        self.constraints_into(z, s, g);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                term: "constraints G(z, s)".into(),
            });
        }
        let half_rho = rho / T::lit(2.0);
        let coupling: T = mu
            .iter()
            .zip(g.iter())
            .map(|(&m, &gi)| (m + half_rho * gi) * gi)
            .sum();
        if !coupling.is_finite() {
            return Err(Error::NonFinite {
                term: "multiplier/penalty term".into(),
            });
        }
        Ok(j + coupling)
    }

    /// `∇_{z_i} L_ρ(z, μ, s)` for block `i` at the full point `z`.
    pub fn grad_block(&self, i: usize, z: &[T], mu: &[T], s: &[T], rho: T) -> Result<Vec<T>> {
        self.check_block(i)?;
        self.check_z(z)?;
        self.check_mu(mu)?;
        self.check_param(s)?;
        let mut out = vec![T::zero(); self.blocks[i].dim];
        self.grad_block_into(i, z, mu, s, rho, &mut out);
        Ok(out)
    }

    pub(crate) fn grad_block_into(&self, i: usize, z: &[T], mu: &[T], s: &[T], rho: T, out: &mut [T]) {
        let spec = &self.blocks[i];
        let range = spec.range();
        let zi = &z[range.clone()];
        match &self.costs[i] {
            Some(c) => c.gradient(zi, out),
            None => out.iter_mut().for_each(|v| *v = T::zero()),
        }
        if let Some(c) = &self.coupling_cost {
            let mut full = vec![T::zero(); self.n_z];
            c.gradient(z, &mut full);
            for (o, &v) in out.iter_mut().zip(&full[range.clone()]) {
                *o += v;
            }
        }
        if let Some(q) = &self.coupling_constraints {
            let mut qv = vec![T::zero(); self.n_coupling];
            q.eval(z, &mut qv);
            for (v, &m) in qv.iter_mut().zip(&mu[..self.n_coupling]) {
                *v = m + rho * *v;
            }
            let mut full = vec![T::zero(); self.n_z];
            q.jacobian_t_mul(z, &qv, &mut full);
            for (o, &v) in out.iter_mut().zip(&full[range]) {
                *o += v;
            }
        }
        if let Some(l) = &self.locals[i] {
            let q = spec.rows.len();
            let mut gv = vec![T::zero(); q];
            l.map.eval(zi, &mut gv);
            l.t.mul_vec_add(s, &mut gv);
            for (v, &m) in gv.iter_mut().zip(&mu[spec.rows.clone()]) {
                *v = m + rho * *v;
            }
            let mut jt = vec![T::zero(); spec.dim];
            l.map.jacobian_t_mul(zi, &gv, &mut jt);
            for (o, &v) in out.iter_mut().zip(&jt) {
                *o += v;
            }
        }
    }

    /// Full gradient `∇_z L_ρ(z, μ, s)`.
    pub fn grad_aug_lagrangian(&self, z: &[T], mu: &[T], s: &[T], rho: T) -> Result<Vec<T>> {
        self.check_z(z)?;
        self.check_mu(mu)?;
        self.check_param(s)?;
        let mut out = vec![T::zero(); self.n_z];
        self.grad_full_into(z, mu, s, rho, &mut out);
        Ok(out)
    }

    pub(crate) fn grad_full_into(&self, z: &[T], mu: &[T], s: &[T], rho: T, out: &mut [T]) {
        // Shared terms are evaluated once instead of once per block.
        out.iter_mut().for_each(|v| *v = T::zero());
        if let Some(c) = &self.coupling_cost {
            c.gradient(z, out);
        }
        if let Some(q) = &self.coupling_constraints {
            let mut qv = vec![T::zero(); self.n_coupling];
            q.eval(z, &mut qv);
            for (v, &m) in qv.iter_mut().zip(&mu[..self.n_coupling]) {
                *v = m + rho * *v;
            }
            let mut full = vec![T::zero(); self.n_z];
            q.jacobian_t_mul(z, &qv, &mut full);
            for (o, &v) in out.iter_mut().zip(&full) {
                *o += v;
            }
        }
        for (i, spec) in self.blocks.iter().enumerate() {
            let range = spec.range();
            let zi = &z[range.clone()];
            let mut buf = vec![T::zero(); spec.dim];
            if let Some(c) = &self.costs[i] {
                c.gradient(zi, &mut buf);
                for (o, &v) in out[range.clone()].iter_mut().zip(&buf) {
                    *o += v;
                }
            }
            if let Some(l) = &self.locals[i] {
                let mut gv = vec![T::zero(); spec.rows.len()];
                l.map.eval(zi, &mut gv);
                l.t.mul_vec_add(s, &mut gv);
                for (v, &m) in gv.iter_mut().zip(&mu[spec.rows.clone()]) {
                    *v = m + rho * *v;
                }
                l.map.jacobian_t_mul(zi, &gv, &mut buf);
                for (o, &v) in out[range].iter_mut().zip(&buf) {
                    *o += v;
                }
            }
        }
    }

    /// `∇_z G(z, s)ᵀ v` (independent of `s`, since `G` is affine in it).
    pub fn constraint_jacobian_t_mul(&self, z: &[T], v: &[T]) -> Result<Vec<T>> {
        self.check_z(z)?;
        self.check_mu(v)?;
        let mut out = vec![T::zero(); self.n_z];
        if let Some(q) = &self.coupling_constraints {
            q.jacobian_t_mul(z, &v[..self.n_coupling], &mut out);
        }
        for (spec, local) in self.blocks.iter().zip(&self.locals) {
            if let Some(l) = local {
                let range = spec.range();
                let mut buf = vec![T::zero(); spec.dim];
                l.map.jacobian_t_mul(&z[range.clone()], &v[spec.rows.clone()], &mut buf);
                for (o, &b) in out[range].iter_mut().zip(&buf) {
                    *o += b;
                }
            }
        }
        Ok(out)
    }

    /// Largest relative discrepancy between every block gradient and a
    /// central finite difference of [`BlockNlp::aug_lagrangian`], using the
    /// step `h = 1e-6·(1 + ‖z‖∞)`. The error of a block is
    /// `‖g_fd − g‖∞ / max(1, ‖g‖∞)`.
    pub fn gradient_audit(&self, z: &[T], mu: &[T], s: &[T], rho: T) -> Result<T> {
        let h = T::lit(1e-6) * (T::one() + norm_inf(z));
        let two_h = h + h;
        let mut worst = T::zero();
        let mut zp = z.to_vec();
        for i in 0..self.blocks.len() {
            let g = self.grad_block(i, z, mu, s, rho)?;
            let range = self.blocks[i].range();
            let mut err = T::zero();
            for (k, j) in range.enumerate() {
                zp[j] = z[j] + h;
                let up = self.aug_lagrangian(&zp, mu, s, rho)?;
                zp[j] = z[j] - h;
                let dn = self.aug_lagrangian(&zp, mu, s, rho)?;
                zp[j] = z[j];
                err = err.max(((up - dn) / two_h - g[k]).abs());
            }
            worst = worst.max(err / norm_inf(&g).max(T::one()));
        }
        Ok(worst)
    }
}

/// Time-stamped parameter `s_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter<T> {
    pub values: Vec<T>,
    pub k: usize,
}

impl<T: Real> Parameter<T> {
    pub fn new(values: Vec<T>, k: usize) -> Self {
        Self { values, k }
    }

    pub fn as_slice(&self) -> &[T] {
        &self.values
    }
}

/// Primal-dual iterate `w = (z, μ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDual<T> {
    pub z: Vec<T>,
    pub mu: Vec<T>,
}

impl<T: Real> PrimalDual<T> {
    pub fn new(z: Vec<T>, mu: Vec<T>) -> Self {
        Self { z, mu }
    }

    /// Zero multipliers sized for `nlp`.
    pub fn with_zero_multipliers(nlp: &BlockNlp<T>, z: Vec<T>) -> Self {
        Self {
            z,
            mu: vec![T::zero(); nlp.n_constraints()],
        }
    }

    /// `‖w − other‖₂` over the stacked `(z, μ)`.
    pub fn distance(&self, other: &Self) -> T {
        let dz: T = self.z.iter().zip(&other.z).map(|(&a, &b)| (a - b) * (a - b)).sum();
        let dm: T = self.mu.iter().zip(&other.mu).map(|(&a, &b)| (a - b) * (a - b)).sum();
        (dz + dm).sqrt()
    }

    pub fn check(&self, nlp: &BlockNlp<T>) -> Result<()> {
        nlp.check_z(&self.z)?;
        nlp.check_mu(&self.mu)
    }
}
