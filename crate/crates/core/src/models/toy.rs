//! Two-variable parametric QP with a closed-form KKT point:
//! `min ‖z‖²  s.t.  z₁ + z₂ = s,  z ∈ [−10, 10]²`.

use crate::error::Result;
use crate::linalg::DenseMatrix;
use crate::problem::{equality_fn, Block, BlockNlp, BoxSet, PrimalDual, QuadraticCost};
use crate::scalar::Real;

pub fn toy_qp<T: Real>() -> Result<BlockNlp<T>> {
    let sum = equality_fn(
        1,
        |z: &[T], out: &mut [T]| out[0] = z[0] + z[1],
        |_z: &[T], v: &[T], out: &mut [T]| {
            out[0] = v[0];
            out[1] = v[0];
        },
    );
    BlockNlp::builder(1)
        .block(
            Block::new(BoxSet::uniform(2, T::lit(-10.0), T::lit(10.0))?, 0)
                .cost(QuadraticCost::new(vec![T::one(); 2], vec![T::zero(); 2])?)
                .local_constraints(sum, Some(DenseMatrix::from_row_major(1, 1, vec![-T::one()])?)),
        )
        .build()
}

/// Exact KKT point `z = (s/2, s/2)`, `μ = −s` (valid while `|s| ≤ 20`).
pub fn toy_qp_solution<T: Real>(s: T) -> PrimalDual<T> {
    let half = s / T::lit(2.0);
    PrimalDual::new(vec![half, half], vec![-s])
}
