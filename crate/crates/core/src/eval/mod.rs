//! Character BLEU, benchmark construction, zero-shot evaluation and the
//! ablation matrix.

mod ablation;
mod benchmark;
mod bleu;
mod evaluate;

pub use ablation::{run_ablation_matrix, AblationConfig, AblationReport, AblationRow, AblationSetup};
pub use benchmark::{build_benchmark, exclude_benchmark, split_sizes, BenchmarkSplit, BENCHMARK_SETS};
pub use bleu::{bleu, char_bleu, sentence_bleu, BleuReport};
pub use evaluate::{evaluate_sets, evaluate_zero_shot, score_set, translate_all, EvalReport, SetReport};

use thiserror::Error;

use crate::model::ModelError;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("nothing to score")]
    EmptyInput,
    #[error("set {0:?} is empty")]
    EmptySet(String),
    #[error("record {0} appears twice")]
    DuplicateId(String),
    #[error("record {0} has no target")]
    NotParallel(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}
