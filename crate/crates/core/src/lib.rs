//! ODF2NNA: build an oversized rectangular dense network from dataset
//! cardinality, train it, prune hidden units whose activations barely vary,
//! rebuild the network with bias compensation, and lightly retrain.

pub mod data;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod pruning;
pub mod refine;
pub mod sizing;

pub mod config;
pub mod manifest;
pub mod model_io;

pub use error::{Error, Result};
