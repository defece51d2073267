//! The TDNN x-vector regressor: dilated 1-D convolution blocks over mel
//! frames, statistics pooling, a 64-dim embedding, and a single sigmoid
//! output head. Forward, hand-written backward, parameter freezing, and
//! binary checkpoints.

mod checkpoint;
mod config;
pub mod gradcheck;
mod net;
mod params;
mod tensor;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, TrainMeta};
pub use config::{BlockSpec, TdnnConfig};
pub use net::{
    backward, forward, forward_frames, l1_grad, l1_loss, sigmoid, stats_pool, ForwardOutput,
};
pub use params::{apply_freeze, Parameters};
pub use tensor::{FrameMatrix, Tensor};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input has {frames} frames; receptive field needs {needed}")]
    TooFewFrames { frames: usize, needed: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("batch length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("forward pass was not run in training mode; no cache to backprop")]
    MissingCache,

    #[error("bad model config: {0}")]
    BadConfig(String),

    #[error("checkpoint version {got} unsupported (expected {want})")]
    VersionMismatch { got: u32, want: u32 },

    #[error("{path}: bad checkpoint: {reason}")]
    BadCheckpoint { path: String, reason: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
