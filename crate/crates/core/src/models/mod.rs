//! Example programs: a two-variable QP, the DC motor and the unicycle
//! formation, plus config-file overrides for the latter two.
//!
//! Motor keys: `l_a r_a k_m j b tau_l u_a x_lower x_upper u_lower u_upper
//! q_y r_u horizon`. Unicycle keys: `horizon q_leader q_12 q_13 r_1 r_2 r_3
//! d_12 d_13 waypoints ref_speed u1_bounds u2_bounds`. Vectors are comma
//! separated; `waypoints` is a flat list of `x, y` pairs.

pub mod dc_motor;
pub mod toy;
pub mod unicycle;

use crate::config::ConfigMap;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub use dc_motor::{
    build_dc_motor_nlp, dc_motor_equilibrium, dc_motor_reference, dc_motor_rhs, dc_motor_rollout, DcMotorLimits,
    DcMotorParams, DcMotorSpec, DcMotorWeights,
};
pub use toy::{toy_qp, toy_qp_solution};
pub use unicycle::{
    agent_rollout, build_unicycle_nlp, formation_error, rk4_step, rk4_step_jacobians, unicycle_rhs, ReferencePath,
    UnicycleFormationSpec,
};

fn set<T: Real>(cfg: &ConfigMap, key: &str, slot: &mut T) -> Result<()> {
    if let Some(v) = cfg.get::<f64>(key)? {
        *slot = T::lit(v);
    }
    Ok(())
}

fn set_array<T: Real, const K: usize>(cfg: &ConfigMap, key: &str, slot: &mut [T; K]) -> Result<()> {
    if let Some(v) = cfg.get_array::<f64, K>(key)? {
        *slot = v.map(T::lit);
    }
    Ok(())
}

fn set_pair<T: Real>(cfg: &ConfigMap, key: &str, slot: &mut (T, T)) -> Result<()> {
    if let Some([a, b]) = cfg.get_array::<f64, 2>(key)? {
        *slot = (T::lit(a), T::lit(b));
    }
    Ok(())
}

impl<T: Real> DcMotorSpec<T> {
    pub fn apply_config(&mut self, cfg: &ConfigMap) -> Result<()> {
        let p = &mut self.params;
        for (key, slot) in [
            ("l_a", &mut p.l_a),
            ("r_a", &mut p.r_a),
            ("k_m", &mut p.k_m),
            ("j", &mut p.j),
            ("b", &mut p.b),
            ("tau_l", &mut p.tau_l),
            ("u_a", &mut p.u_a),
        ] {
            set(cfg, key, slot)?;
        }
        set_array(cfg, "x_lower", &mut self.limits.x_lower)?;
        set_array(cfg, "x_upper", &mut self.limits.x_upper)?;
        set(cfg, "u_lower", &mut self.limits.u_lower)?;
        set(cfg, "u_upper", &mut self.limits.u_upper)?;
        set(cfg, "q_y", &mut self.weights.q_y)?;
        set(cfg, "r_u", &mut self.weights.r_u)?;
        if let Some(n) = cfg.get::<usize>("horizon")? {
            self.horizon = n;
        }
        Ok(())
    }
}

impl<T: Real> UnicycleFormationSpec<T> {
    pub fn apply_config(&mut self, cfg: &ConfigMap) -> Result<()> {
        if let Some(n) = cfg.get::<usize>("horizon")? {
            self.horizon = n;
        }
        set_array(cfg, "q_leader", &mut self.q_leader)?;
        set_array(cfg, "q_12", &mut self.q_12)?;
        set_array(cfg, "q_13", &mut self.q_13)?;
        for (a, key) in ["r_1", "r_2", "r_3"].into_iter().enumerate() {
            set_array(cfg, key, &mut self.r[a])?;
        }
        set_array(cfg, "d_12", &mut self.d_12)?;
        set_array(cfg, "d_13", &mut self.d_13)?;
        set_pair(cfg, "u1_bounds", &mut self.u1_bounds)?;
        set_pair(cfg, "u2_bounds", &mut self.u2_bounds)?;
        set(cfg, "ref_speed", &mut self.path.speed)?;
        if let Some(flat) = cfg.get_list::<f64>("waypoints")? {
            if flat.len() % 2 != 0 {
                return Err(Error::config("waypoints", "needs an even number of coordinates"));
            }
            self.path.waypoints = flat.chunks(2).map(|c| [T::lit(c[0]), T::lit(c[1])]).collect();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_overrides_motor_and_unicycle_fields() {
        let cfg = ConfigMap::parse("q_y = 3\nhorizon = 12\nx_upper = 5, 2.5\nu_a = 55").unwrap();
        let mut m = DcMotorSpec::<f64>::new(0.02);
        m.apply_config(&cfg).unwrap();
        assert_eq!((m.weights.q_y, m.horizon, m.limits.x_upper, m.params.u_a), (3.0, 12, [5.0, 2.5], 55.0));

        let cfg = ConfigMap::parse("waypoints = 0,0, 1,0, 1,1, 2,1\nr_2 = 1, 2\nhorizon = 5").unwrap();
        let mut u = UnicycleFormationSpec::<f64>::new(0.35);
        u.apply_config(&cfg).unwrap();
        assert_eq!(u.path.waypoints.len(), 4);
        assert_eq!(u.r[1], [1.0, 2.0]);
        assert_eq!(u.horizon, 5);
        assert!(UnicycleFormationSpec::<f64>::new(0.35)
            .apply_config(&ConfigMap::parse("waypoints = 0, 0, 1").unwrap())
            .is_err());
    }
}
