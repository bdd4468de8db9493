//! Minimal deterministic neural-network engine: tensors, layer forward/backward
//! passes, loss, Adam, gradient checking, and a binary checkpoint format.
//!
//! Everything runs in 64-bit floats, single-threaded, with explicitly seeded
//! RNGs, so identical seeds and inputs give bitwise-identical results.

mod adam;
mod checkpoint;
mod gradcheck;
mod layers;
mod params;
mod tensor;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use gradcheck::grad_check;
pub use layers::{
    cross_entropy_loss, global_max_pool, global_max_pool_backward, softmax,
    softmax_cross_entropy, Activation, Conv1d, Conv1dCache, Conv1dGrads, Dense, DenseCache,
    DenseGrads, FeedForward, FeedForwardCache, FeedForwardGrads, Lstm, LstmCache, LstmGrads,
};
pub use params::{with_prefix, with_prefix_mut, ParamSet};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("non-finite value produced in {context}")]
    NonFinite { context: &'static str },
    #[error("input length {len} shorter than receptive field {receptive_field}")]
    InputTooShort { len: usize, receptive_field: usize },
    #[error("cannot pool over an empty time axis")]
    EmptyPool,
    #[error("parameter sets do not line up at {context}: {detail}")]
    ParamMismatch {
        context: &'static str,
        detail: String,
    },
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    BadCheckpoint(String),
}
