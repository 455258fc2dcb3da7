//! Series-excited DC motor with bilinear dynamics, discretised by explicit
//! Euler over a fixed horizon and tracking a piecewise-constant speed.
//!
//! Decision vector `z = (x_0, …, x_{N−1}, u_0, …, u_{N−1}, r)`; the first
//! state is pinned to the measured one and `r` to the current reference, so
//! the parameter `s = (x₁, x₂, y_ref)` enters the constraints linearly.

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::problem::{Block, BlockNlp, BoxSet, EqualityMap, SmoothFn};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcMotorParams<T> {
    /// Armature inductance [H].
    pub l_a: T,
    /// Armature resistance [Ω].
    pub r_a: T,
    /// Motor constant [Nm/A²].
    pub k_m: T,
    /// Inertia [Nm·s²].
    pub j: T,
    /// Viscous friction [Nm·s].
    pub b: T,
    /// Load torque [Nm].
    pub tau_l: T,
    /// Armature voltage [V].
    pub u_a: T,
}

impl<T: Real> Default for DcMotorParams<T> {
    fn default() -> Self {
        Self {
            l_a: T::lit(0.307),
            r_a: T::lit(12.548),
            k_m: T::lit(0.22567),
            j: T::lit(0.00385),
            b: T::lit(0.00783),
            tau_l: T::lit(1.47),
            u_a: T::lit(60.0),
        }
    }
}

impl<T: Real> DcMotorParams<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [self.l_a, self.r_a, self.k_m, self.j, self.b, self.tau_l, self.u_a];
        if all.iter().any(|&v| !(v > T::zero())) {
            return Err(Error::InvalidProblem("motor parameters must be positive".into()));
        }
        Ok(())
    }
}

/// State is (armature current [A], angular speed [rad/s]); the input is the
/// field current [A].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcMotorLimits<T> {
    pub x_lower: [T; 2],
    pub x_upper: [T; 2],
    pub u_lower: T,
    pub u_upper: T,
}

impl<T: Real> Default for DcMotorLimits<T> {
    fn default() -> Self {
        Self {
            x_lower: [T::lit(-2.0), T::lit(-8.0)],
            x_upper: [T::lit(5.0), T::lit(1.5)],
            u_lower: T::lit(1.27),
            u_upper: T::lit(1.4),
        }
    }
}

/// `ẋ = A x + B x u + c`.
pub fn dc_motor_rhs<T: Real>(x: &[T], u: T, p: &DcMotorParams<T>) -> [T; 2] {
    [
        -(p.r_a / p.l_a) * x[0] - (p.k_m / p.l_a) * x[1] * u + p.u_a / p.l_a,
        -(p.b / p.j) * x[1] + (p.k_m / p.j) * x[0] * u - p.tau_l / p.j,
    ]
}

/// Steady state `(x₁, u)` holding speed `x₂`, found by Newton on the
/// stationary equations.
pub fn dc_motor_equilibrium<T: Real>(speed: T, p: &DcMotorParams<T>) -> Option<(T, T)> {
    // x₁ = (u_a − k_m x₂ u)/R_a from the first row; substitute into the second.
    let f = |u: T| {
        let x1 = (p.u_a - p.k_m * speed * u) / p.r_a;
        -p.b * speed + p.k_m * x1 * u - p.tau_l
    };
    let mut u = T::lit(1.3);
    for _ in 0..50 {
        let h = T::lit(1e-7);
        let d = (f(u + h) - f(u - h)) / (h + h);
        if d == T::zero() {
            return None;
        }
        let step = f(u) / d;
        u -= step;
        if step.abs() < T::lit(1e-14) {
            break;
        }
    }
    let x1 = (p.u_a - p.k_m * speed * u) / p.r_a;
    (f(u).abs() < T::lit(1e-8)).then_some((x1, u))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcMotorWeights<T> {
    /// Weight on `(x₂ − r)²`.
    pub q_y: T,
    /// Weight on `u²`.
    pub r_u: T,
}

impl<T: Real> Default for DcMotorWeights<T> {
    fn default() -> Self {
        Self {
            q_y: T::lit(10.0),
            r_u: T::lit(0.01),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcMotorSpec<T> {
    pub params: DcMotorParams<T>,
    pub limits: DcMotorLimits<T>,
    pub weights: DcMotorWeights<T>,
    pub horizon: usize,
    pub dt: T,
}

impl<T: Real> DcMotorSpec<T> {
    pub fn new(dt: T) -> Self {
        Self {
            params: DcMotorParams::default(),
            limits: DcMotorLimits::default(),
            weights: DcMotorWeights::default(),
            horizon: 30,
            dt,
        }
    }

    pub fn n_z(&self) -> usize {
        3 * self.horizon + 1
    }

    pub fn state_index(&self, t: usize) -> usize {
        2 * t
    }

    pub fn input_index(&self, t: usize) -> usize {
        2 * self.horizon + t
    }

    pub fn reference_index(&self) -> usize {
        3 * self.horizon
    }
}

/// Box for the pinned first state. It only has to contain any state the
/// plant can reach, not the operating limits.
const PIN_BOX: [f64; 2] = [50.0, 200.0];
const REF_BOX: f64 = 10.0;

struct Dynamics<T> {
    p: DcMotorParams<T>,
    n: usize,
    dt: T,
}

impl<T: Real> EqualityMap<T> for Dynamics<T> {
    fn out_dim(&self) -> usize {
        2 * self.n + 1
    }

    fn eval(&self, z: &[T], out: &mut [T]) {
        let n = self.n;
        out[0] = z[0];
        out[1] = z[1];
        for t in 0..n - 1 {
            let x = &z[2 * t..2 * t + 2];
            let f = dc_motor_rhs(x, z[2 * n + t], &self.p);
            out[2 + 2 * t] = z[2 * t + 2] - x[0] - self.dt * f[0];
            out[3 + 2 * t] = z[2 * t + 3] - x[1] - self.dt * f[1];
        }
        out[2 * n] = z[3 * n];
    }

    fn jacobian_t_mul(&self, z: &[T], v: &[T], out: &mut [T]) {
        let n = self.n;
        let p = &self.p;
        let dt = self.dt;
        out.iter_mut().for_each(|o| *o = T::zero());
        out[0] += v[0];
        out[1] += v[1];
        let (a11, a22) = (-(p.r_a / p.l_a), -(p.b / p.j));
        let (b1, b2) = (-(p.k_m / p.l_a), p.k_m / p.j);
        for t in 0..n - 1 {
            let (v1, v2) = (v[2 + 2 * t], v[3 + 2 * t]);
            let (x1, x2, u) = (z[2 * t], z[2 * t + 1], z[2 * n + t]);
            out[2 * t + 2] += v1;
            out[2 * t + 3] += v2;
            out[2 * t] += (-T::one() - dt * a11) * v1 - dt * b2 * u * v2;
            out[2 * t + 1] += -dt * b1 * u * v1 + (-T::one() - dt * a22) * v2;
            out[2 * n + t] += -dt * b1 * x2 * v1 - dt * b2 * x1 * v2;
        }
        out[3 * n] += v[2 * n];
    }
}

struct TrackingCost<T> {
    n: usize,
    w: DcMotorWeights<T>,
}

impl<T: Real> SmoothFn<T> for TrackingCost<T> {
    fn value(&self, z: &[T]) -> T {
        let n = self.n;
        let r = z[3 * n];
        (0..n)
            .map(|t| {
                let e = z[2 * t + 1] - r;
                let u = z[2 * n + t];
                self.w.q_y * e * e + self.w.r_u * u * u
            })
            .sum()
    }

    fn gradient(&self, z: &[T], grad: &mut [T]) {
        let n = self.n;
        let two = T::lit(2.0);
        let r = z[3 * n];
        grad.iter_mut().for_each(|g| *g = T::zero());
        for t in 0..n {
            let e = two * self.w.q_y * (z[2 * t + 1] - r);
            grad[2 * t + 1] = e;
            grad[3 * n] -= e;
            grad[2 * n + t] = two * self.w.r_u * z[2 * n + t];
        }
    }
}

/// Single-block program with `3N + 1` variables and `2N + 1` constraints.
pub fn build_dc_motor_nlp<T: Real>(spec: &DcMotorSpec<T>) -> Result<BlockNlp<T>> {
    spec.params.validate()?;
    let n = spec.horizon;
    if n < 2 {
        return Err(Error::InvalidProblem("motor horizon must be at least 2".into()));
    }
    if !(spec.dt > T::zero()) {
        return Err(Error::config("dt", "must be positive"));
    }
    let lim = &spec.limits;
    let mut lower = Vec::with_capacity(spec.n_z());
    let mut upper = Vec::with_capacity(spec.n_z());
    lower.extend([T::lit(-PIN_BOX[0]), T::lit(-PIN_BOX[1])]);
    upper.extend([T::lit(PIN_BOX[0]), T::lit(PIN_BOX[1])]);
    for _ in 1..n {
        lower.extend(lim.x_lower);
        upper.extend(lim.x_upper);
    }
    lower.extend(std::iter::repeat_n(lim.u_lower, n));
    upper.extend(std::iter::repeat_n(lim.u_upper, n));
    lower.push(T::lit(-REF_BOX));
    upper.push(T::lit(REF_BOX));
    let bounds = BoxSet::new(lower, upper)?;

    // Rows: x_0 − (s₁, s₂), N − 1 Euler defects, r − s₃.
    let rows = 2 * n + 1;
    let mut t = DenseMatrix::zeros(rows, 3);
    t[(0, 0)] = -T::one();
    t[(1, 1)] = -T::one();
    t[(2 * n, 2)] = -T::one();

    BlockNlp::builder(3)
        .block(
            Block::new(bounds, 0)
                .cost(TrackingCost { n, w: spec.weights })
                .local_constraints(
                    Dynamics {
                        p: spec.params,
                        n,
                        dt: spec.dt,
                    },
                    Some(t),
                ),
        )
        // Bilinear dynamics squared by the penalty.
        .degree_hint(4)
        .build()
}

/// Explicit Euler rollout from `x0` under `inputs`, packed as a decision
/// vector with `r = reference`.
pub fn dc_motor_rollout<T: Real>(spec: &DcMotorSpec<T>, x0: [T; 2], inputs: &[T], reference: T) -> Vec<T> {
    let n = spec.horizon;
    let mut z = vec![T::zero(); spec.n_z()];
    let mut x = x0;
    for t in 0..n {
        z[2 * t] = x[0];
        z[2 * t + 1] = x[1];
        z[2 * n + t] = inputs[t];
        let f = dc_motor_rhs(&x, inputs[t], &spec.params);
        x = [x[0] + spec.dt * f[0], x[1] + spec.dt * f[1]];
    }
    z[3 * n] = reference;
    z
}

/// Speed reference: +2 rad/s on [0, 2) s, −2 on [2, 4) s, +2 afterwards.
pub fn dc_motor_reference<T: Real>(t: T) -> T {
    // Half a nanosecond of slack keeps grid points such as 500·0.004 on the
    // intended side of the switch.
    let t = t + T::lit(5e-10);
    if t >= T::lit(2.0) && t < T::lit(4.0) {
        T::lit(-2.0)
    } else {
        T::lit(2.0)
    }
}
