use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::CorpusRecord;
use crate::rng::substream;

/// The five titled test sets of the benchmark.
pub const BENCHMARK_SETS: [&str; 5] =
    ["Book of Han", "New Tang History", "Ming History", "Xu Xiake's Travels", "Taiping Guangji"];

/// `(train, valid, test)` for `n` records: train is `floor(0.8 n)`, valid
/// takes half of the rest rounded down, test the remainder.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let train = n * 8 / 10;
    let valid = (n - train) / 2;
    (train, valid, n - train - valid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkSplit {
    pub name: String,
    pub train: Vec<CorpusRecord>,
    pub valid: Vec<CorpusRecord>,
    pub test: Vec<CorpusRecord>,
}

impl BenchmarkSplit {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.train.iter().chain(&self.valid).chain(&self.test).map(|r| r.id.as_str())
    }
}

/// Shuffle each set with a stream keyed by the seed and the set name, then
/// cut it 8:1:1.
pub fn build_benchmark(sets: &[(String, Vec<CorpusRecord>)], seed: u64) -> Result<Vec<BenchmarkSplit>, EvalError> {
    sets.iter()
        .map(|(name, records)| {
            if records.is_empty() {
                return Err(EvalError::EmptySet(name.clone()));
            }
            let mut seen = HashSet::new();
            for r in records {
                if !r.is_parallel() {
                    return Err(EvalError::NotParallel(r.id.clone()));
                }
                if !seen.insert(r.id.as_str()) {
                    return Err(EvalError::DuplicateId(r.id.clone()));
                }
            }
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut substream(seed, &[b"benchmark", name.as_bytes()]));
            let (train, valid, _) = split_sizes(shuffled.len());
            let test = shuffled.split_off(train + valid);
            let valid = shuffled.split_off(train);
            Ok(BenchmarkSplit { name: name.clone(), train: shuffled, valid, test })
        })
        .collect()
}

/// Drop every record that shares an id or a source sentence with any
/// benchmark split. Returns the kept records and the number removed.
pub fn exclude_benchmark(corpus: &[CorpusRecord], splits: &[BenchmarkSplit]) -> (Vec<CorpusRecord>, usize) {
    let ids: HashSet<&str> = splits.iter().flat_map(|s| s.ids()).collect();
    let sources: HashSet<&str> = splits
        .iter()
        .flat_map(|s| s.train.iter().chain(&s.valid).chain(&s.test))
        .map(|r| r.source.as_str())
        .collect();
    let kept: Vec<CorpusRecord> = corpus
        .iter()
        .filter(|r| !ids.contains(r.id.as_str()) && !sources.contains(r.source.as_str()))
        .cloned()
        .collect();
    let removed = corpus.len() - kept.len();
    (kept, removed)
}
