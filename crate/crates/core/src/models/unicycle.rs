//! Leader-follower formation of three unicycles, RK4-discretised per
//! sampling interval.
//!
//! Agent `a` owns block `a` with states `x_0..x_N` followed by inputs
//! `u_0..u_{N−1}`; the leader's block also carries pinned copies
//! `p_1..p_N` of the reference window. Parameter layout:
//! `s = (x⁽¹⁾₀, x⁽²⁾₀, x⁽³⁾₀, ref_1, …, ref_N)`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problem::{Block, BlockNlp, BoxSet, EqualityMap, SmoothFn};
use crate::scalar::Real;

pub const AGENTS: usize = 3;

/// `(u₁ cos θ, u₁ sin θ, u₂)`.
pub fn unicycle_rhs<T: Real>(x: &[T], u: &[T]) -> [T; 3] {
    [u[0] * x[2].cos(), u[0] * x[2].sin(), u[1]]
}

type Mat3 = [[f64; 3]; 3];
type Mat32 = [[f64; 2]; 3];

/// One classical RK4 step of length `h` with the input held.
pub fn rk4_step<T: Real>(x: &[T], u: &[T], h: T) -> [T; 3] {
    let half = h / T::lit(2.0);
    let k1 = unicycle_rhs(x, u);
    let x2: Vec<T> = (0..3).map(|i| x[i] + half * k1[i]).collect();
    let k2 = unicycle_rhs(&x2, u);
    let x3: Vec<T> = (0..3).map(|i| x[i] + half * k2[i]).collect();
    let k3 = unicycle_rhs(&x3, u);
    let x4: Vec<T> = (0..3).map(|i| x[i] + h * k3[i]).collect();
    let k4 = unicycle_rhs(&x4, u);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    [0, 1, 2].map(|i| x[i] + sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]))
}

fn rk4_jacobians(x: &[f64], u: &[f64], h: f64) -> (Mat3, Mat32) {
    // Jacobians of f at a point: only the heading column of f_x is non-zero.
    let fx = |p: &[f64]| -> Mat3 { [[0.0, 0.0, -u[0] * p[2].sin()], [0.0, 0.0, u[0] * p[2].cos()], [0.0; 3]] };
    let fu = |p: &[f64]| -> Mat32 { [[p[2].cos(), 0.0], [p[2].sin(), 0.0], [0.0, 1.0]] };
    let mul33 = |a: &Mat3, b: &Mat3| -> Mat3 {
        let mut c = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    };
    let mul32 = |a: &Mat3, b: &Mat32| -> Mat32 {
        let mut c = [[0.0; 2]; 3];
        for i in 0..3 {
            for j in 0..2 {
                c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    };
    // Stage point x_s = x + a·k_prev; dk/dx = F_x(x_s)(I + a·dk_prev/dx),
    // dk/du = F_x(x_s)·a·dk_prev/du + F_u(x_s).
    let stage = |a: f64, k_prev: &[f64; 3], kx: &Mat3, ku: &Mat32| -> ([f64; 3], Mat3, Mat32) {
        let p = [x[0] + a * k_prev[0], x[1] + a * k_prev[1], x[2] + a * k_prev[2]];
        let k = unicycle_rhs(&p, u);
        let f = fx(&p);
        let mut inner = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inner[i][j] = if i == j { 1.0 } else { 0.0 } + a * kx[i][j];
            }
        }
        let mut scaled_u = *ku;
        scaled_u.iter_mut().flatten().for_each(|v| *v *= a);
        let mut dku = mul32(&f, &scaled_u);
        let g = fu(&p);
        for i in 0..3 {
            for j in 0..2 {
                dku[i][j] += g[i][j];
            }
        }
        (k, mul33(&f, &inner), dku)
    };
    let zero3 = [[0.0; 3]; 3];
    let zero32 = [[0.0; 2]; 3];
    let (k1, k1x, k1u) = stage(0.0, &[0.0; 3], &zero3, &zero32);
    let (k2, k2x, k2u) = stage(h / 2.0, &k1, &k1x, &k1u);
    let (k3, k3x, k3u) = stage(h / 2.0, &k2, &k2x, &k2u);
    let (_, k4x, k4u) = stage(h, &k3, &k3x, &k3u);
    let mut jx = [[0.0; 3]; 3];
    let mut ju = [[0.0; 2]; 3];
    for i in 0..3 {
        for j in 0..3 {
            jx[i][j] = if i == j { 1.0 } else { 0.0 } + h / 6.0 * (k1x[i][j] + 2.0 * k2x[i][j] + 2.0 * k3x[i][j] + k4x[i][j]);
        }
        for j in 0..2 {
            ju[i][j] = h / 6.0 * (k1u[i][j] + 2.0 * k2u[i][j] + 2.0 * k3u[i][j] + k4u[i][j]);
        }
    }
    (jx, ju)
}

/// Jacobians of [`rk4_step`] in the solver's scalar type.
pub fn rk4_step_jacobians<T: Real>(x: &[T], u: &[T], h: T) -> ([[T; 3]; 3], [[T; 2]; 3]) {
    let xf: Vec<f64> = x.iter().map(|v| v.as_f64()).collect();
    let uf: Vec<f64> = u.iter().map(|v| v.as_f64()).collect();
    let (jx, ju) = rk4_jacobians(&xf, &uf, h.as_f64());
    (jx.map(|r| r.map(T::lit)), ju.map(|r| r.map(T::lit)))
}

/// Piecewise-linear path traversed at constant speed; the heading is the
/// direction of the current segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePath<T> {
    pub waypoints: Vec<[T; 2]>,
    pub speed: T,
}

impl<T: Real> ReferencePath<T> {
    pub fn l_shape() -> Self {
        Self {
            waypoints: vec![[T::zero(), T::zero()], [T::lit(4.0), T::zero()], [T::lit(4.0), T::lit(4.0)]],
            speed: T::lit(0.25),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::config("waypoints", "need at least two"));
        }
        if !(self.speed > T::zero()) {
            return Err(Error::config("ref_speed", "must be positive"));
        }
        if self.waypoints.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("waypoints", "consecutive waypoints must differ"));
        }
        Ok(())
    }

    fn segment_length(&self, i: usize) -> T {
        let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
        ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
    }

    /// Times at which the reference passes an interior waypoint.
    pub fn switch_times(&self) -> Vec<T> {
        let mut t = T::zero();
        (0..self.waypoints.len() - 2)
            .map(|i| {
                t += self.segment_length(i) / self.speed;
                t
            })
            .collect()
    }

    /// Time at which the end of the path is reached.
    pub fn duration(&self) -> T {
        (0..self.waypoints.len() - 1).map(|i| self.segment_length(i)).sum::<T>() / self.speed
    }

    /// `(x, y, θ)` at time `t`; holds the last waypoint after the end.
    pub fn at(&self, t: T) -> [T; 3] {
        let mut remaining = self.speed * t.max(T::zero());
        let last = self.waypoints.len() - 2;
        for i in 0..=last {
            let len = self.segment_length(i);
            let (a, b) = (self.waypoints[i], self.waypoints[i + 1]);
            let heading = (b[1] - a[1]).atan2(b[0] - a[0]);
            if remaining <= len || i == last {
                let f = (remaining / len).min(T::one());
                return [a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]), heading];
            }
            remaining -= len;
        }
        unreachable!("loop returns on the last segment")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnicycleFormationSpec<T> {
    pub horizon: usize,
    pub dt: T,
    /// Diagonals of the weight matrices.
    pub q_leader: [T; 3],
    pub q_12: [T; 3],
    pub q_13: [T; 3],
    pub r: [[T; 2]; AGENTS],
    pub d_12: [T; 3],
    pub d_13: [T; 3],
    pub path: ReferencePath<T>,
    /// Forward speed box.
    pub u1_bounds: (T, T),
    /// Turn rate box.
    pub u2_bounds: (T, T),
    /// Box on positions (and on the pinned reference positions).
    pub position_bound: T,
    pub heading_bound: T,
}

impl<T: Real> UnicycleFormationSpec<T> {
    pub fn new(dt: T) -> Self {
        let tenth = T::lit(0.1);
        Self {
            horizon: 20,
            dt,
            q_leader: [T::lit(10.0), T::lit(10.0), T::one()],
            q_12: [T::lit(5.0), T::lit(5.0), T::zero()],
            q_13: [T::lit(5.0), T::lit(5.0), T::zero()],
            r: [[tenth; 2]; AGENTS],
            d_12: [T::lit(-0.5), T::lit(0.5), T::zero()],
            d_13: [T::lit(-0.5), T::lit(-0.5), T::zero()],
            path: ReferencePath::l_shape(),
            u1_bounds: (T::zero(), T::lit(0.5)),
            u2_bounds: (T::lit(-FRAC_PI_2), T::lit(FRAC_PI_2)),
            position_bound: T::lit(50.0),
            heading_bound: T::lit(20.0),
        }
    }

    /// Dimension of an agent block.
    pub fn block_dim(&self, agent: usize) -> usize {
        let n = self.horizon;
        let base = 3 * (n + 1) + 2 * n;
        if agent == 0 {
            base + 3 * n
        } else {
            base
        }
    }

    pub fn param_dim(&self) -> usize {
        3 * AGENTS + 3 * self.horizon
    }

    /// Constraint rows: `3N + 3` per agent plus `3N` reference pins.
    pub fn n_constraints(&self) -> usize {
        AGENTS * (3 * self.horizon + 3) + 3 * self.horizon
    }

    pub fn block_offset(&self, agent: usize) -> usize {
        (0..agent).map(|a| self.block_dim(a)).sum()
    }

    /// Offset of state `x_j` inside an agent block.
    pub fn state_index(&self, j: usize) -> usize {
        3 * j
    }

    /// Offset of input `u_j` inside an agent block.
    pub fn input_index(&self, j: usize) -> usize {
        3 * (self.horizon + 1) + 2 * j
    }

    /// Offset of the pin `p_j` (`j = 1..=N`) inside the leader block.
    pub fn pin_index(&self, j: usize) -> usize {
        3 * (self.horizon + 1) + 2 * self.horizon + 3 * (j - 1)
    }

    /// Reference window `ref(t + j·dt)`, `j = 1..=N`, flattened.
    pub fn reference_window(&self, t: T) -> Vec<T> {
        (1..=self.horizon)
            .flat_map(|j| self.path.at(t + T::from_usize_lossy(j) * self.dt))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("horizon", "must be at least 1"));
        }
        if !(self.dt > T::zero()) {
            return Err(Error::config("dt", "must be positive"));
        }
        let weights = self.q_leader.iter().chain(&self.q_12).chain(&self.q_13);
        if weights.clone().any(|&w| w < T::zero()) {
            return Err(Error::config("weights", "must be non-negative"));
        }
        if self.r.iter().flatten().any(|&w| !(w > T::zero())) {
            return Err(Error::config("r", "input weights must be positive"));
        }
        self.path.validate()
    }
}

struct AgentDynamics<T> {
    n: usize,
    dt: T,
    pins: bool,
}

impl<T: Real> EqualityMap<T> for AgentDynamics<T> {
    fn out_dim(&self) -> usize {
        3 * self.n + 3 + if self.pins { 3 * self.n } else { 0 }
    }

    fn eval(&self, z: &[T], out: &mut [T]) {
        let n = self.n;
        let u0 = 3 * (n + 1);
        out[..3].copy_from_slice(&z[..3]);
        for j in 0..n {
            let next = rk4_step(&z[3 * j..3 * j + 3], &z[u0 + 2 * j..u0 + 2 * j + 2], self.dt);
            for i in 0..3 {
                out[3 + 3 * j + i] = z[3 * (j + 1) + i] - next[i];
            }
        }
        if self.pins {
            let p0 = u0 + 2 * n;
            out[3 * n + 3..].copy_from_slice(&z[p0..p0 + 3 * n]);
        }
    }

    fn jacobian_t_mul(&self, z: &[T], v: &[T], out: &mut [T]) {
        let n = self.n;
        let u0 = 3 * (n + 1);
        out.iter_mut().for_each(|o| *o = T::zero());
        for i in 0..3 {
            out[i] += v[i];
        }
        for j in 0..n {
            let (jx, ju) = rk4_step_jacobians(&z[3 * j..3 * j + 3], &z[u0 + 2 * j..u0 + 2 * j + 2], self.dt);
            let w = &v[3 + 3 * j..6 + 3 * j];
            for i in 0..3 {
                out[3 * (j + 1) + i] += w[i];
                out[3 * j + i] -= (0..3).map(|r| jx[r][i] * w[r]).sum::<T>();
            }
            for i in 0..2 {
                out[u0 + 2 * j + i] -= (0..3).map(|r| ju[r][i] * w[r]).sum::<T>();
            }
        }
        if self.pins {
            let p0 = u0 + 2 * n;
            for k in 0..3 * n {
                out[p0 + k] += v[3 * n + 3 + k];
            }
        }
    }
}

/// Input effort of one agent, plus the leader's tracking of its pins.
struct AgentCost<T> {
    n: usize,
    r: [T; 2],
    q_track: Option<[T; 3]>,
}

impl<T: Real> SmoothFn<T> for AgentCost<T> {
    fn value(&self, z: &[T]) -> T {
        let n = self.n;
        let u0 = 3 * (n + 1);
        let mut total: T = (0..n)
            .map(|j| self.r[0] * z[u0 + 2 * j].powi(2) + self.r[1] * z[u0 + 2 * j + 1].powi(2))
            .sum();
        if let Some(q) = self.q_track {
            let p0 = u0 + 2 * n;
            for j in 1..=n {
                for i in 0..3 {
                    total += q[i] * (z[3 * j + i] - z[p0 + 3 * (j - 1) + i]).powi(2);
                }
            }
        }
        total
    }

    fn gradient(&self, z: &[T], grad: &mut [T]) {
        let n = self.n;
        let u0 = 3 * (n + 1);
        let two = T::lit(2.0);
        grad.iter_mut().for_each(|g| *g = T::zero());
        for j in 0..n {
            grad[u0 + 2 * j] = two * self.r[0] * z[u0 + 2 * j];
            grad[u0 + 2 * j + 1] = two * self.r[1] * z[u0 + 2 * j + 1];
        }
        if let Some(q) = self.q_track {
            let p0 = u0 + 2 * n;
            for j in 1..=n {
                for i in 0..3 {
                    let e = two * q[i] * (z[3 * j + i] - z[p0 + 3 * (j - 1) + i]);
                    grad[3 * j + i] += e;
                    grad[p0 + 3 * (j - 1) + i] -= e;
                }
            }
        }
    }
}

/// `Σ_j (x⁽¹⁾_j − x⁽ᵃ⁾_j − d)ᵀ Q (x⁽¹⁾_j − x⁽ᵃ⁾_j − d)` over both followers.
struct FormationCost<T> {
    n: usize,
    offsets: [usize; AGENTS],
    terms: [([T; 3], [T; 3]); 2],
}

impl<T: Real> SmoothFn<T> for FormationCost<T> {
    fn value(&self, z: &[T]) -> T {
        let mut total = T::zero();
        for (f, (q, d)) in self.terms.iter().enumerate() {
            let (lead, fol) = (self.offsets[0], self.offsets[f + 1]);
            for j in 1..=self.n {
                for i in 0..3 {
                    let e = z[lead + 3 * j + i] - z[fol + 3 * j + i] - d[i];
                    total += q[i] * e * e;
                }
            }
        }
        total
    }

    fn gradient(&self, z: &[T], grad: &mut [T]) {
        let two = T::lit(2.0);
        grad.iter_mut().for_each(|g| *g = T::zero());
        for (f, (q, d)) in self.terms.iter().enumerate() {
            let (lead, fol) = (self.offsets[0], self.offsets[f + 1]);
            for j in 1..=self.n {
                for i in 0..3 {
                    let e = two * q[i] * (z[lead + 3 * j + i] - z[fol + 3 * j + i] - d[i]);
                    grad[lead + 3 * j + i] += e;
                    grad[fol + 3 * j + i] -= e;
                }
            }
        }
    }
}

/// Three agent blocks in two groups: the leader, then both followers.
pub fn build_unicycle_nlp<T: Real>(spec: &UnicycleFormationSpec<T>) -> Result<BlockNlp<T>> {
    spec.validate()?;
    let n = spec.horizon;
    let p = spec.param_dim();
    let mut builder = BlockNlp::builder(p);
    for agent in 0..AGENTS {
        let pins = agent == 0;
        let mut lower = Vec::with_capacity(spec.block_dim(agent));
        let mut upper = Vec::with_capacity(spec.block_dim(agent));
        let pos = spec.position_bound;
        let head = spec.heading_bound;
        for _ in 0..=n {
            lower.extend([-pos, -pos, -head]);
            upper.extend([pos, pos, head]);
        }
        for _ in 0..n {
            lower.extend([spec.u1_bounds.0, spec.u2_bounds.0]);
            upper.extend([spec.u1_bounds.1, spec.u2_bounds.1]);
        }
        if pins {
            for _ in 0..n {
                lower.extend([-pos, -pos, -head]);
                upper.extend([pos, pos, head]);
            }
        }
        let map = AgentDynamics { n, dt: spec.dt, pins };
        let mut t = DenseMatrix::zeros(map.out_dim(), p);
        for i in 0..3 {
            t[(i, 3 * agent + i)] = -T::one();
        }
        if pins {
            for k in 0..3 * n {
                t[(3 * n + 3 + k, 3 * AGENTS + k)] = -T::one();
            }
        }
        let cost = AgentCost {
            n,
            r: spec.r[agent],
            q_track: pins.then_some(spec.q_leader),
        };
        let group = usize::from(agent > 0);
        builder = builder.block(
            Block::new(BoxSet::new(lower, upper)?, group)
                .cost(cost)
                .local_constraints(map, Some(t)),
        );
    }
    let offsets = [0, 1, 2].map(|a| spec.block_offset(a));
    let nlp = builder
        .coupling_cost(FormationCost {
            n,
            offsets,
            terms: [(spec.q_12, spec.d_12), (spec.q_13, spec.d_13)],
        })
        .build()?;
    assert_eq!(nlp.n_constraints(), spec.n_constraints());
    Ok(nlp)
}

/// RK4 rollout of one agent from `x0`, packed as its block (pins, if any,
/// are filled from `window`).
pub fn agent_rollout<T: Real>(
    spec: &UnicycleFormationSpec<T>,
    agent: usize,
    x0: [T; 3],
    inputs: &[[T; 2]],
    window: &[T],
) -> Vec<T> {
    let n = spec.horizon;
    let mut block = vec![T::zero(); spec.block_dim(agent)];
    block[..3].copy_from_slice(&x0);
    let mut x = x0;
    for j in 0..n {
        let i0 = spec.input_index(j);
        block[i0] = inputs[j][0];
        block[i0 + 1] = inputs[j][1];
        x = rk4_step(&x, &inputs[j], spec.dt);
        block[3 * (j + 1)..3 * (j + 1) + 3].copy_from_slice(&x);
    }
    if agent == 0 {
        let p0 = spec.pin_index(1);
        block[p0..p0 + 3 * n].copy_from_slice(&window[..3 * n]);
    }
    block
}

/// Planar formation error `‖(x⁽¹⁾ − x⁽ᵃ⁾ − d)_{x,y}‖₂`; headings are not
/// part of the formation.
pub fn formation_error<T: Real>(leader: &[T], follower: &[T], d: &[T; 3]) -> T {
    let ex = leader[0] - follower[0] - d[0];
    let ey = leader[1] - follower[1] - d[1];
    (ex * ex + ey * ey).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        assert_eq!(unicycle_rhs(&[0.0, 0.0, 0.0], &[1.0, 0.0]), [1.0, 0.0, 0.0]);
        let f = unicycle_rhs(&[0.0, 0.0, FRAC_PI_2], &[1.0, 0.0]);
        assert!(f[0].abs() < 1e-16 && (f[1] - 1.0).abs() < 1e-16 && f[2] == 0.0);
        assert_eq!(unicycle_rhs(&[3.0, -1.0, 0.7], &[0.0, 0.4]), [0.0, 0.0, 0.4]);
    }

    #[test]
    fn rk4_jacobians_match_finite_differences() {
        let x = [0.3f64, -0.2, 0.9];
        let u = [0.4, -0.6];
        let h = 0.35;
        let (jx, ju) = rk4_step_jacobians(&x, &u, h);
        let eps = 1e-6;
        for c in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += eps;
            xm[c] -= eps;
            let (a, b) = (rk4_step(&xp, &u, h), rk4_step(&xm, &u, h));
            for r in 0..3 {
                assert!(((a[r] - b[r]) / (2.0 * eps) - jx[r][c]).abs() < 1e-8);
            }
        }
        for c in 0..2 {
            let mut up = u;
            let mut um = u;
            up[c] += eps;
            um[c] -= eps;
            let (a, b) = (rk4_step(&x, &up, h), rk4_step(&x, &um, h));
            for r in 0..3 {
                assert!(((a[r] - b[r]) / (2.0 * eps) - ju[r][c]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn path_sampling() {
        let path = ReferencePath::<f64>::l_shape();
        assert_eq!(path.switch_times(), vec![16.0]);
        assert_eq!(path.duration(), 32.0);
        assert_eq!(path.at(8.0), [2.0, 0.0, 0.0]);
        let p = path.at(20.0);
        assert!((p[0] - 4.0).abs() < 1e-15 && (p[1] - 1.0).abs() < 1e-15 && (p[2] - FRAC_PI_2).abs() < 1e-15);
        assert_eq!(path.at(100.0)[1], 4.0);
    }

    #[test]
    fn layout_and_counts() {
        let spec = UnicycleFormationSpec::<f64>::new(0.35);
        let nlp = build_unicycle_nlp(&spec).unwrap();
        let n = spec.horizon;
        assert_eq!(nlp.n_constraints(), 3 * (3 * n + 3) + 3 * n);
        assert_eq!(nlp.n_coupling_constraints(), 0);
        assert!(!nlp.has_coupling_constraints());
        assert_eq!(nlp.groups(), &[vec![0], vec![1, 2]]);
        assert_eq!(nlp.param_dim(), 9 + 3 * n);
    }

    #[test]
    fn rollout_is_feasible() {
        let spec = UnicycleFormationSpec::<f64>::new(0.35);
        let nlp = build_unicycle_nlp(&spec).unwrap();
        let n = spec.horizon;
        let window = spec.reference_window(0.0);
        let x0 = [[0.0, 0.0, 0.1], [-0.5, 0.5, 0.0], [-0.5, -0.4, -0.2]];
        let mut z = Vec::new();
        let mut s = Vec::new();
        for (a, x) in x0.iter().enumerate() {
            let inputs: Vec<[f64; 2]> = (0..n).map(|j| [0.3, 0.05 * (j as f64 - 10.0) / 10.0 * (a as f64 + 1.0)]).collect();
            z.extend(agent_rollout(&spec, a, *x, &inputs, &window));
            s.extend(x);
        }
        s.extend(&window);
        let g = nlp.constraints(&z, &s).unwrap();
        assert!(g.iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn formation_gradient_on_follower() {
        let spec = UnicycleFormationSpec::<f64>::new(0.35);
        let nlp = build_unicycle_nlp(&spec).unwrap();
        let n_z = nlp.n_z();
        let z: Vec<f64> = (0..n_z).map(|i| ((i * 37 % 101) as f64 / 101.0 - 0.5) * 0.4 + 0.2).collect();
        let z = nlp.bounds().project(&z).unwrap();
        let mu = vec![0.0; nlp.n_constraints()];
        let s: Vec<f64> = vec![0.0; nlp.param_dim()];
        let g_full = nlp.grad_block(1, &z, &mu, &s, 1.0).unwrap();
        // Remove the follower's own input/penalty terms: compare the state part
        // against −2Q₁₂(x⁽¹⁾ − x⁽²⁾ − d₁₂) plus the penalty gradient at μ = 0.
        let lead = spec.block_offset(0);
        let fol = spec.block_offset(1);
        let mut z_feasible_free = nlp.grad_block(1, &z, &mu, &s, 1.0).unwrap();
        let penalty_only = {
            // Same block gradient with formation weights removed.
            let mut sp = spec.clone();
            sp.q_12 = [0.0; 3];
            let nlp0 = build_unicycle_nlp(&sp).unwrap();
            nlp0.grad_block(1, &z, &mu, &s, 1.0).unwrap()
        };
        for (a, b) in z_feasible_free.iter_mut().zip(&penalty_only) {
            *a -= b;
        }
        for j in 1..=spec.horizon {
            for i in 0..3 {
                let e = z[lead + 3 * j + i] - z[fol + 3 * j + i] - spec.d_12[i];
                let expected = -2.0 * spec.q_12[i] * e;
                assert!((z_feasible_free[3 * j + i] - expected).abs() < 1e-12);
            }
        }
        assert_eq!(g_full.len(), spec.block_dim(1));
    }

    #[test]
    fn formation_error_ignores_heading() {
        let d = [-0.5, 0.5, 0.0];
        assert_eq!(formation_error(&[1.0, 1.0, 0.3], &[1.5, 0.5, -2.0], &d), 0.0);
        assert!((formation_error(&[0.0, 0.0, 0.0], &[1.0, 0.0, 0.0], &d) - 0.5f64.sqrt()).abs() < 1e-15);
    }
}
