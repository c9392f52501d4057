//! Minimal dense f64 tensor kernels with analytic gradients.
//!
//! Everything here is written for verification first: all arithmetic is
//! 64-bit, kernels are serial and deterministic, and every reduction along a
//! softmax/attention axis uses a value-sorted summation so that results are
//! bitwise invariant under permutations of the reduced elements. The f32
//! throughput path used for timing lives in [`crate::bench`] instead.

mod gradcheck;
mod kernels;
mod mhsa;
mod tensor;

pub use gradcheck::finite_diff_check;
pub use kernels::{
    gelu, gelu_backward, layernorm_backward, layernorm_forward, linear_backward, linear_forward,
    mlp1_backward, mlp1_forward, softmax, softmax_backward, LayerNorm, LayerNormGrads, Linear,
    LinearGrads, Mlp1, Mlp1Grads,
};
pub use mhsa::{mhsa_backward, mhsa_forward, MhsaGrads, MhsaParams};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

/// Sums a buffer in ascending value order (by IEEE total order).
///
/// The result depends only on the multiset of values, never on their
/// incoming arrangement, which makes attention outputs bitwise equivariant
/// under sequence permutations.
pub(crate) fn ordered_sum(buf: &mut [f64]) -> f64 {
    buf.sort_unstable_by(f64::total_cmp);
    let mut acc = 0.0;
    for v in buf.iter() {
        acc += v;
    }
    acc
}
