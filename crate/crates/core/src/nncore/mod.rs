//! Deterministic f32 forward-pass kernels.
//!
//! Every kernel that performs weight products is generic over a
//! [`MacCounter`], so the same code path that runs inference can also be
//! instrumented to count its multiply-accumulates.

mod activation;
mod attention;
mod batchnorm;
mod conv;
mod counter;
mod dense;
mod gru;
mod tensor;

pub use activation::{sigmoid, Activation};
pub use attention::{attention_pool_and_classify, AttentionParams, AttentionScale, Projection};
pub use batchnorm::{batchnorm_inference, BatchNorm};
pub use conv::{conv2d, Conv2d};
pub use counter::{MacCounter, MacTally, NoCount};
pub use dense::Dense;
pub use gru::{GruParams, CANDIDATE, RESET, UPDATE};
pub use tensor::{Tensor3, TimestepSequence};

/// Convenience wrapper matching [`GruParams::forward`].
pub fn gru_forward(params: &GruParams, inputs: &TimestepSequence, h0: &[f32]) -> crate::Result<TimestepSequence> {
    params.forward(inputs, h0)
}

/// Convenience wrapper matching [`AttentionParams::forward`].
pub fn scaled_dot_attention(params: &AttentionParams, l: &TimestepSequence) -> crate::Result<TimestepSequence> {
    params.forward(l)
}
