//! Just enough neural network for the probes: f64 tensors, a valid 2-d
//! convolution and its transpose, linear layers, a Gaussian latent, cosine
//! losses, Adam, and hand-written backward passes checked by finite
//! differences.

pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod latent;
pub mod linear;
pub mod loss;
pub mod tensor;

pub use adam::{sgd_step, Adam, AdamConfig};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, RawCheckpoint,
};
pub use conv::{conv2d_forward, Conv2d, ConvSpec, ConvTranspose2d};
pub use gradcheck::{grad_check, GradCheckOptions, GradCheckReport, GradCheckable};
pub use latent::{sample_latent, GaussianLatent, LatentMode, LATENT_DIM};
pub use linear::{linear_forward, Linear};
pub use loss::{
    cosine_similarity, cosine_with_grad, maxmargin_loss, maxmargin_with_grad, MarginGrad,
};
pub use tensor::{Param, Tensor};
