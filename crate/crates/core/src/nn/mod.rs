//! Dense networks with hand-written backpropagation.
//!
//! Inputs are row batches (`batch × features`). Hidden layers apply
//! affine → batch norm → tanh; the head is affine followed by tanh (actor) or
//! nothing (critic). A critic-style net receives the action as an auxiliary
//! input concatenated to the input of one hidden layer.

mod adam;
pub mod checkpoint;
mod dense;
mod gradcheck;
mod whiten;

pub use adam::{lr_at, AdamState};
pub use gradcheck::{gradient_check, relative_error, GradCheck};
pub use dense::{
    default_hidden_width, Activation, BackwardResult, BatchNorm, DenseNet, ForwardCache, Gradients,
    Layer, LayerGrad, Mode, NetShape, BN_EPS, BN_MOMENTUM,
};
pub use whiten::WhitenState;
