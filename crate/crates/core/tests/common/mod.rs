#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use otsplit::{smooth_fn, Block, BlockNlp, BoxSet, Nlp};

/// Unconstrained one-variable program `min f(z)` on `[lo, hi]`.
pub fn scalar_program(f: fn(f64) -> f64, df: fn(f64) -> f64, lo: f64, hi: f64) -> Nlp {
    BlockNlp::builder(1)
        .block(
            Block::new(BoxSet::uniform(1, lo, hi).unwrap(), 0)
                .cost(smooth_fn(move |z: &[f64]| f(z[0]), move |z: &[f64], g: &mut [f64]| g[0] = df(z[0]))),
        )
        .build()
        .unwrap()
}

/// Uniform sample of the box of `nlp`.
pub fn random_in_box(nlp: &Nlp, rng: &mut ChaCha8Rng) -> Vec<f64> {
    nlp.bounds()
        .lower()
        .iter()
        .zip(nlp.bounds().upper())
        .map(|(&l, &u)| l + (u - l) * rng.random::<f64>())
        .collect()
}

pub fn random_vec(n: usize, half_width: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-half_width..half_width)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Gaussian elimination with partial pivoting; the reference for small
/// dense solves.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// A random, exactly feasible point of the formation program: every agent is
/// an RK4 rollout of random admissible inputs, pins hold the reference window.
pub fn unicycle_point(spec: &otsplit::models::UnicycleFormationSpec<f64>, r: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let t = r.random_range(0.0..spec.path.duration());
    let window = spec.reference_window(t);
    let starts: Vec<[f64; 3]> = (0..3)
        .map(|_| [r.random_range(-2.0..8.0), r.random_range(-2.0..8.0), r.random_range(-3.0..3.0)])
        .collect();
    let mut z = Vec::new();
    for (a, x0) in starts.iter().enumerate() {
        let inputs: Vec<[f64; 2]> =
            (0..spec.horizon).map(|_| [r.random_range(0.0..0.5), r.random_range(-1.5..1.5)]).collect();
        z.extend(otsplit::models::agent_rollout(spec, a, *x0, &inputs, &window));
    }
    let mut s: Vec<f64> = starts.iter().flatten().copied().collect();
    s.extend(&window);
    (z, s)
}

/// Formation error around one reference switch.
#[derive(Debug, Clone)]
pub struct SwitchResponse {
    pub switch_t: f64,
    /// Error at the last step before the switch.
    pub before: f64,
    pub peak: f64,
    pub peak_t: f64,
    /// Smallest error within `SETTLE_STEPS` after the peak.
    pub trough: f64,
}

pub const PEAK_STEPS: usize = 20;
pub const SETTLE_STEPS: usize = 20;

impl SwitchResponse {
    pub fn spiked(&self) -> bool {
        self.peak >= 1.5 * self.before
    }

    pub fn decayed(&self) -> bool {
        self.trough <= 0.5 * self.peak
    }
}

/// Responses of `ε₁₂` (the trace output) to every switch the run covers.
pub fn switch_responses(trace: &otsplit::Trace, switch_times: &[f64]) -> Vec<SwitchResponse> {
    let eps: Vec<f64> = trace.rows.iter().map(|r| r.y).collect();
    let mut out = Vec::new();
    for &sw in switch_times {
        let Some(ks) = trace.rows.iter().position(|r| r.t >= sw - 1e-9) else { continue };
        if ks == 0 {
            continue;
        }
        let end = (ks + PEAK_STEPS).min(eps.len());
        let kp = (ks..end).max_by(|&a, &b| eps[a].total_cmp(&eps[b])).unwrap();
        let settle_end = (kp + SETTLE_STEPS + 1).min(eps.len());
        let trough = eps[kp..settle_end].iter().copied().fold(f64::INFINITY, f64::min);
        out.push(SwitchResponse {
            switch_t: sw,
            before: eps[ks - 1],
            peak: eps[kp],
            peak_t: trace.rows[kp].t,
            trough,
        });
    }
    out
}
