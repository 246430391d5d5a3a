//! Three-layer MLP experts and the expert selector.

mod checkpoint;
mod mlp;
mod optim;
mod train;

pub use checkpoint::{read_params, read_params_from, write_params, write_params_to};
pub use mlp::{hidden_width, init_mlp, mlp_forward, mlp_grad, Activations, MlpParams};
pub use optim::{cosine_lr, Sgd};
pub use train::{
    fit_heads, selector_loss_and_grad, train_expert_group, train_selector, Expert, FusionMode,
    Head, Selector, TrainConfig,
};
