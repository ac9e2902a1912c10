//! Minimal dense feed-forward engine: seeded initialization, forward pass
//! with optional activation capture, backpropagation, mini-batch optimizers
//! and early stopping.

pub mod activation;
pub mod network;
pub mod train;

pub use activation::Activation;
pub use network::{
    init_network, ActivationTrace, DenseLayer, DenseNetwork, LayerSpec, TaskKind,
};
pub use train::{loss_and_grads, loss_value, train, Loss, Optimizer, TrainConfig, TrainReport};
