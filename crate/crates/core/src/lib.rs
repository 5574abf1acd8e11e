//! Toolkit for ancient-to-modern Chinese translation at desk scale.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: cleaning rules, MinHash de-duplication, classification
//!   metadata and corpus statistics.
//! - [`align`]: forward-maximum-matching segmentation and the disyllabic
//!   word alignment between a monosyllabic ancient character and a
//!   two-character modern word.
//! - [`noising`]: character tokenizer, disyllabic aligned substitution (DAS)
//!   and dual masked language modelling (DMLM) example builders.
//! - [`model`]: a small encoder-decoder transformer with its own reverse-mode
//!   autodiff, the three training losses, AdamW training and decoding.
//! - [`eval`]: corpus BLEU, benchmark splitting, zero-shot evaluation and the
//!   ablation matrix.

pub mod align;
pub mod corpus;
pub mod eval;
pub mod model;
pub mod noising;
pub mod rng;

pub use align::{align_pair, alignment_coverage, segment_target, AlignmentSet, Lexicon, Span};
pub use corpus::{
    clean_text, deduplicate, estimate_similarity, minhash_signature, Category, CharMapTable,
    Cleaner, CorpusRecord, DedupConfig, Era, MinHashSignature, StatsReport,
};
pub use eval::{bleu, AblationConfig, BenchmarkSplit, BleuReport};
pub use model::{DecodeConfig, Hyperparams, LossWeights, ModelParams, Tensor};
pub use noising::{DasExample, DmlmExample, NoiseConfig, Tokenizer};
