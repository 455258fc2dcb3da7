//! Adaptive Dormand–Prince 5(4) integrator for the true plant.

use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions<T> {
    pub atol: T,
    pub rtol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for OdeOptions<T> {
    fn default() -> Self {
        Self {
            atol: T::lit(1e-8),
            rtol: T::lit(1e-8),
            max_steps: 1_000_000,
        }
    }
}

const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// State after `dt` of the autonomous system `ẋ = rhs(x)` (inputs are held
/// by the caller's closure).
pub fn integrate_plant<T, F>(rhs: F, x0: &[T], dt: T, opts: &OdeOptions<T>) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T], &mut [T]),
{
    if !(dt > T::zero()) {
        return Err(Error::config("dt", "integration span must be positive"));
    }
    let n = x0.len();
    let a: [[T; 6]; 7] = A.map(|r| r.map(T::lit));
    let e: [T; 7] = E.map(T::lit);

    let mut x = x0.to_vec();
    let mut k = vec![vec![T::zero(); n]; 7];
    rhs(&x, &mut k[0]);
    let mut t = T::zero();
    let mut h = dt;
    let h_min = dt * T::lit(1e-12);
    let mut stage = vec![T::zero(); n];
    let mut x_new = vec![T::zero(); n];
    let mut steps = 0;
    while t < dt {
        if steps == opts.max_steps {
            return Err(Error::Integration {
                t: t.as_f64(),
                reason: "step limit reached".into(),
            });
        }
        steps += 1;
        let last = t + h >= dt;
        if last {
            h = dt - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = T::zero();
                for j in 0..s {
                    acc += a[s][j] * k[j][i];
                }
                stage[i] = x[i] + h * acc;
            }
            rhs(&stage, &mut k[s]);
            if s == 6 {
                x_new.copy_from_slice(&stage);
            }
        }
        let mut err = T::zero();
        for i in 0..n {
            let mut ei = T::zero();
            for (s, ks) in k.iter().enumerate() {
                ei += e[s] * ks[i];
            }
            let scale = opts.atol + opts.rtol * x[i].abs().max(x_new[i].abs());
            let r = h * ei / scale;
            err += r * r;
        }
        err = (err / T::from_usize_lossy(n.max(1))).sqrt();
        if !err.is_finite() {
            return Err(Error::Integration {
                t: t.as_f64(),
                reason: "non-finite state".into(),
            });
        }
        if err <= T::one() {
            t = if last { dt } else { t + h };
            x.copy_from_slice(&x_new);
            // First-same-as-last: the final stage is f at the new point.
            let (head, tail) = k.split_at_mut(6);
            head[0].copy_from_slice(&tail[0]);
        }
        let fac = if err == T::zero() {
            T::lit(5.0)
        } else {
            (T::lit(0.9) * err.powf(T::lit(-0.2))).max(T::lit(0.2)).min(T::lit(5.0))
        };
        h *= fac;
        if h < h_min && t < dt {
            return Err(Error::Integration {
                t: t.as_f64(),
                reason: format!("step size underflow ({:e})", h.as_f64()),
            });
        }
    }
    Ok(x)
}
