//! Dense feed-forward networks: forward and reverse passes, Adam, Polyak
//! averaging and text checkpoints. Everything is `f64`.

mod adam;
mod checkpoint;
mod finite_diff;
mod mlp;
mod tensor;

pub use adam::{AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON};
pub use checkpoint::{format_f64, read_checkpoint};
pub use finite_diff::{central_difference, finite_diff_grad, relative_error, DEFAULT_STEP, RELATIVE_ERROR_FLOOR};
pub use mlp::{soft_update, Activation, ForwardCache, LayerView, Mlp};
pub use tensor::Tensor2;
