//! Training-instance construction: tokenizer, disyllabic aligned
//! substitution and dual masking.

mod config;
mod das;
mod dmlm;
mod tokenizer;

pub use config::{CorruptionProbs, MaskRange, NoiseConfig, FIXED_DEC_MASK_RATIO, FIXED_ENC_MASK_RATIO};
pub use das::{make_das, DasExample, Substitution};
pub use dmlm::{make_dmlm, Corruption, DmlmExample, MaskedSide};
pub use tokenizer::{Tokenizer, BOS, EOS, MASK, NUM_SPECIALS, PAD, UNK};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("{side} side has no maskable positions")]
    SequenceTooShort { side: &'static str },
    #[error("invalid noise configuration: {0}")]
    InvalidConfig(String),
    #[error("alignment does not fit the sentence pair: {0}")]
    InvalidAlignment(String),
    #[error("tokenizer file line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
