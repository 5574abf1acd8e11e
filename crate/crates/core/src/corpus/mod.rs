//! Corpus ingestion, cleaning, de-duplication and statistics.

mod charmap;
mod clean;
mod dedup;
pub mod io;
mod minhash;
mod record;
mod stats;

pub use charmap::CharMapTable;
pub use clean::{clean_text, Cleaner, CjkRanges, ALLOWED_PUNCTUATION};
pub use dedup::{deduplicate, DedupConfig, DedupKey, DedupOutcome, DuplicatePair};
pub use minhash::{estimate_similarity, exact_jaccard, minhash_signature, shingles, MinHashSignature};
pub use record::{Category, CorpusRecord, Era};
pub use stats::{corpus_stats, StatsReport};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("text has {len} characters, fewer than the shingle size {shingle_size}")]
    TextTooShort { len: usize, shingle_size: usize },
    #[error("signatures are not comparable: {0}")]
    SignatureMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("table {table}: {msg}")]
    InvalidTable { table: String, msg: String },
    #[error("record {id}: era must be present exactly when the category is History")]
    EraMismatch { id: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("io error on {path}: {msg}")]
    Io { path: String, msg: String },
}
