//! Model classes, exact gradients, optimizers and training.

pub mod checkpoint;
pub mod dataset;
pub mod engine;
pub mod loss;
pub mod optim;
pub mod params;
pub mod spec;
pub mod train;

pub use checkpoint::Checkpoint;
pub use dataset::{Batch, LabeledDataset};
pub use loss::{
    argmax, forward, forward_rows, log_softmax, loss, loss_and_grad, model_gradient,
    output_gradients, softmax, value_and_grad, LossKind,
};
pub use optim::{adamw_step, AdamWState, Optimizer, OptimizerKind};
pub use params::{layout, Block, ParamVector};
pub use spec::{Activation, ModelKind, NetworkSpec};
pub use train::{
    gauss_newton_interpolate, refit_output_layer, train, train_observed, Init, TrainConfig,
    TrainOutcome,
};
