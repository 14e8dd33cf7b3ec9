//! Minimal real-valued network stack with explicit forward/backward passes.

mod activation;
mod checkpoint;
mod dense;
mod loss;
mod mlp;
mod optimizer;

pub use activation::{relu, relu_backward, sigmoid, softmax, softmax_backward, softplus};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, NamedArray};
pub use dense::{DenseGrads, DenseLayer};
pub use loss::{cross_entropy, mse, softmax_cross_entropy, LossValue};
pub use mlp::{Activation, Mlp};
pub use optimizer::{OptimizerKind, OptimizerState};
