//! Closed-loop wiring of the example programs.

use crate::error::Result;
use crate::models::dc_motor::{
    build_dc_motor_nlp, dc_motor_equilibrium, dc_motor_reference, dc_motor_rhs, dc_motor_rollout, DcMotorSpec,
};
use crate::models::toy::toy_qp;
use crate::models::unicycle::{agent_rollout, build_unicycle_nlp, formation_error, unicycle_rhs, UnicycleFormationSpec, AGENTS};
use crate::problem::BlockNlp;
use crate::scalar::{clamp, Real};

use super::closed_loop::ClosedLoopModel;

/// Speed tracking of the DC motor; the output is the angular speed.
pub struct DcMotorScenario<T: Real> {
    pub spec: DcMotorSpec<T>,
    pub x_init: [T; 2],
    nlp: BlockNlp<T>,
}

impl<T: Real> DcMotorScenario<T> {
    /// Starts from the standstill equilibrium.
    pub fn new(spec: DcMotorSpec<T>) -> Result<Self> {
        let (x1, _) = dc_motor_equilibrium(T::zero(), &spec.params)
            .ok_or_else(|| crate::error::Error::InvalidProblem("motor has no standstill equilibrium".into()))?;
        Self::with_initial_state(spec, [x1, T::zero()])
    }

    pub fn with_initial_state(spec: DcMotorSpec<T>, x_init: [T; 2]) -> Result<Self> {
        let nlp = build_dc_motor_nlp(&spec)?;
        Ok(Self { spec, x_init, nlp })
    }
}

impl<T: Real> ClosedLoopModel<T> for DcMotorScenario<T> {
    fn id(&self) -> &'static str {
        "dc-motor"
    }

    fn nlp(&self) -> &BlockNlp<T> {
        &self.nlp
    }

    fn dt(&self) -> T {
        self.spec.dt
    }

    fn initial_state(&self) -> Vec<T> {
        self.x_init.to_vec()
    }

    fn parameter(&self, x: &[T], t: T) -> Vec<T> {
        vec![x[0], x[1], dc_motor_reference(t)]
    }

    fn initial_guess(&self, x: &[T], s: &[T]) -> Vec<T> {
        let lim = &self.spec.limits;
        let target = clamp(s[2], lim.x_lower[1], lim.x_upper[1]);
        let u = dc_motor_equilibrium(target, &self.spec.params)
            .map_or((lim.u_lower + lim.u_upper) / T::lit(2.0), |(_, u)| u);
        let u = clamp(u, lim.u_lower, lim.u_upper);
        let inputs = vec![u; self.spec.horizon];
        dc_motor_rollout(&self.spec, [x[0], x[1]], &inputs, s[2])
    }

    fn input(&self, z: &[T]) -> Vec<T> {
        vec![z[self.spec.input_index(0)]]
    }

    fn plant_rhs(&self, x: &[T], u: &[T], dx: &mut [T]) {
        dx.copy_from_slice(&dc_motor_rhs(x, u[0], &self.spec.params));
    }

    fn output(&self, x: &[T], _u: &[T]) -> T {
        x[1]
    }
}

/// Three unicycles; the output is the leader/first-follower formation error.
pub struct UnicycleScenario<T: Real> {
    pub spec: UnicycleFormationSpec<T>,
    pub x_init: [[T; 3]; AGENTS],
    nlp: BlockNlp<T>,
}

impl<T: Real> UnicycleScenario<T> {
    /// Agents start in formation at the first waypoint, facing along the
    /// first segment.
    pub fn new(spec: UnicycleFormationSpec<T>) -> Result<Self> {
        let r0 = spec.path.at(T::zero());
        let leader = [r0[0], r0[1], r0[2]];
        let follower = |d: &[T; 3]| [leader[0] - d[0], leader[1] - d[1], leader[2]];
        let x_init = [leader, follower(&spec.d_12), follower(&spec.d_13)];
        Self::with_initial_state(spec, x_init)
    }

    pub fn with_initial_state(spec: UnicycleFormationSpec<T>, x_init: [[T; 3]; AGENTS]) -> Result<Self> {
        let nlp = build_unicycle_nlp(&spec)?;
        Ok(Self { spec, x_init, nlp })
    }

    /// Formation errors `(ε₁₂, ε₁₃)` of a stacked plant state.
    pub fn formation_errors(&self, x: &[T]) -> (T, T) {
        (
            formation_error(&x[0..3], &x[3..6], &self.spec.d_12),
            formation_error(&x[0..3], &x[6..9], &self.spec.d_13),
        )
    }
}

impl<T: Real> ClosedLoopModel<T> for UnicycleScenario<T> {
    fn id(&self) -> &'static str {
        "unicycles"
    }

    fn nlp(&self) -> &BlockNlp<T> {
        &self.nlp
    }

    fn dt(&self) -> T {
        self.spec.dt
    }

    fn initial_state(&self) -> Vec<T> {
        self.x_init.iter().flatten().copied().collect()
    }

    fn parameter(&self, x: &[T], t: T) -> Vec<T> {
        let mut s = x[..3 * AGENTS].to_vec();
        s.extend(self.spec.reference_window(t));
        s
    }

    fn initial_guess(&self, x: &[T], s: &[T]) -> Vec<T> {
        let window = &s[3 * AGENTS..];
        let cruise = [clamp(self.spec.path.speed, self.spec.u1_bounds.0, self.spec.u1_bounds.1), T::zero()];
        let inputs = vec![cruise; self.spec.horizon];
        (0..AGENTS)
            .flat_map(|a| agent_rollout(&self.spec, a, [x[3 * a], x[3 * a + 1], x[3 * a + 2]], &inputs, window))
            .collect()
    }

    fn input(&self, z: &[T]) -> Vec<T> {
        (0..AGENTS)
            .flat_map(|a| {
                let i = self.spec.block_offset(a) + self.spec.input_index(0);
                [z[i], z[i + 1]]
            })
            .collect()
    }

    fn plant_rhs(&self, x: &[T], u: &[T], dx: &mut [T]) {
        for a in 0..AGENTS {
            dx[3 * a..3 * a + 3].copy_from_slice(&unicycle_rhs(&x[3 * a..3 * a + 3], &u[2 * a..2 * a + 2]));
        }
    }

    fn output(&self, x: &[T], _u: &[T]) -> T {
        self.formation_errors(x).0
    }
}

/// The two-variable QP driven along `s(t) = rate · t`; the plant state is
/// the parameter itself and the output is the applied `z₁`.
pub struct ToyScenario<T: Real> {
    pub dt: T,
    /// Parameter change per second.
    pub rate: T,
    pub s_init: T,
    nlp: BlockNlp<T>,
}

impl<T: Real> ToyScenario<T> {
    /// `s_k = 0.01 k` at any sampling period.
    pub fn new(dt: T) -> Result<Self> {
        Ok(Self {
            dt,
            rate: T::lit(0.01) / dt,
            s_init: T::zero(),
            nlp: toy_qp()?,
        })
    }
}

impl<T: Real> ClosedLoopModel<T> for ToyScenario<T> {
    fn id(&self) -> &'static str {
        "toy-qp"
    }

    fn nlp(&self) -> &BlockNlp<T> {
        &self.nlp
    }

    fn dt(&self) -> T {
        self.dt
    }

    fn initial_state(&self) -> Vec<T> {
        vec![self.s_init]
    }

    fn parameter(&self, x: &[T], _t: T) -> Vec<T> {
        vec![x[0]]
    }

    fn initial_guess(&self, _x: &[T], _s: &[T]) -> Vec<T> {
        vec![T::zero(); 2]
    }

    fn input(&self, z: &[T]) -> Vec<T> {
        z.to_vec()
    }

    fn plant_rhs(&self, _x: &[T], _u: &[T], dx: &mut [T]) {
        dx[0] = self.rate;
    }

    fn output(&self, _x: &[T], u: &[T]) -> T {
        u[0]
    }
}
