//! Differentiable numeric core: feed-forward encoders with exact
//! backpropagation, the Adam optimizer and a central-difference gradient
//! oracle used to check both.

mod adam;
mod encoder;
mod gradcheck;

pub use adam::{adam_step, AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use encoder::{ActivationCache, Embedding, Encoder, EncoderSpec, Gradients};
pub use gradcheck::{central_differences, finite_diff_grad, relative_error};
