//! From-scratch LSTM and bidirectional-LSTM multi-label classifiers.
//!
//! The network is `embedding → recurrent layer 1 → dropout → recurrent
//! layer 2 → dropout → sigmoid output (11 units)`. Layer 2's state at the
//! last valid timestep feeds the output layer; for BD-LSTM that is the
//! forward direction's last state concatenated with the backward
//! direction's state at timestep 0.
//!
//! Everything is generic over [`Scalar`] so gradient checks can run in
//! `f64` while production models train and serialize in `f32`.

mod io;
mod lstm;
mod model;
mod params;
mod train;

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::Float;
use thiserror::Error;

use crate::embedding::EmbeddingError;

pub use io::{load_model, load_model_with_annotations, save_model, save_model_with_annotations, FORMAT_VERSION, MAGIC};
pub use lstm::lstm_cell;
pub use model::{
    backward, bce_loss, forward, forward_train, forward_with_masks, predict, DropoutMasks, ForwardCache,
    Prediction, BCE_EPSILON, DEFAULT_THRESHOLD,
};
pub use params::{
    Architecture, Gate, LayerParams, NetworkDims, NetworkParameters, RecurrentLayer, DEFAULT_DROPOUT,
};
pub use train::{train, Adam, TrainConfig, TrainOutcome};

/// Float types the network can run in.
pub trait Scalar:
    Float
    + LinalgScalar
    + ScalarOperand
    + Debug
    + Send
    + Sync
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + 'static
{
    /// Lossy conversion from `f64`.
    fn of(v: f64) -> Self;
}

impl Scalar for f32 {
    fn of(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    fn of(v: f64) -> Self {
        v
    }
}

#[derive(Debug, Error)]
pub enum NetError {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("sequence has no valid timesteps")]
    EmptySequence,
    #[error("cache was produced by different parameters than the ones supplied")]
    StaleCache,
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("non-finite loss at epoch {epoch}, sample {sample}")]
    NonFiniteLoss { epoch: usize, sample: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unsupported model format version {found} (expected {expected})")]
    FormatVersionMismatch { found: u8, expected: u8 },
    #[error("corrupt model payload: {0}")]
    CorruptPayload(String),
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("model i/o: {0}")]
    Io(#[from] std::io::Error),
}
