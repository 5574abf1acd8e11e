//! Encoder-decoder transformer trained with the substitution and dual
//! masked objectives.
//!
//! All arithmetic is `f64`. Gradients come from a small tape
//! ([`graph::Graph`]) with fused kernels for the handful of operations the
//! model needs.

pub mod checkpoint;
mod decode;
pub mod graph;
mod loss;
mod optim;
mod params;
mod tensor;
mod train;
mod transformer;

pub use decode::{decode, greedy_decode, DecodeConfig};
pub use graph::{AttnSpan, Gradients, Graph, Pick, Var};
pub use loss::{
    dmlm_components, loss_and_grads, loss_das, loss_dmlm, loss_total, objective_value, LossParts, LossWeights,
    Objective,
};
pub use optim::{AdamW, AdamWConfig};
pub use params::{
    AttnIds, DecLayerIds, EncLayerIds, FfnIds, Hyperparams, Layout, ModelParams, NormIds, ParamBlock, ParamId,
};
pub use tensor::Tensor;
pub use train::{
    final_epoch_loss, loss_log_csv, noised_views, prepare_pairs, train, LossRecord, NoiseStats, Phase, Schedule, TrainConfig,
    TrainOutcome, TrainingPair,
};
pub use transformer::{forward_bidirectional, forward_causal, forward_causal_full, CausalOutput};

use thiserror::Error;

use crate::align::AlignError;
use crate::noising::NoiseError;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("sequence of length {len} exceeds max_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("token id {id} is outside the vocabulary of {vocab_size}")]
    InvalidToken { id: u32, vocab_size: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("no masked {side} positions in the batch")]
    NoMaskedPositions { side: &'static str },
    #[error("loss is not finite")]
    NonFiniteLoss,
    #[error("graph has already been differentiated")]
    GraphReused,
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Align(#[from] AlignError),
}
