//! Disyllabic word alignment.
//!
//! The source sentence is split into characters, the target is segmented
//! into words, and a source character is paired with a two-character target
//! word when the word contains that character. Target words that also occur
//! verbatim in the source (usually names) are never aligned.

mod align_pair;
mod lexicon;
mod segment;

pub use align_pair::{align_pair, alignment_coverage, AlignedPair, AlignmentSet, Coverage};
pub use lexicon::Lexicon;
pub use segment::{segment_target, Span};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AlignError {
    #[error("lexicon entry on line {line} is empty")]
    EmptyWord { line: usize },
    #[error("segments do not partition the target sentence: {0}")]
    InvalidSegments(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("record {0} has no target side")]
    NotParallel(String),
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}
