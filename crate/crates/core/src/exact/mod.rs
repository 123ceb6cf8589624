//! Closed-form unlearning solvers for linear models, deep linear networks and
//! two-layer perceptrons, plus the counterexample showing why the linearized
//! constraints alone are not enough.

mod counterexample;
mod deep_linear;
mod linear;
mod perceptron;

pub use counterexample::{counterexample_c41, Counterexample};
pub use deep_linear::{
    deep_linear_param_norm_construct, deep_linear_predictor_delta, deep_linear_predictor_unlearn,
    effective_predictor,
};
pub use linear::linear_min_norm_unlearn;
pub use perceptron::{
    active_neurons, perceptron_prune, perceptron_prune_with, sparsify_first_layer, Pruned,
    ACTIVE_TOL,
};
