use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Category, CorpusRecord, Era};

/// Sentence and character counts for a corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub sentences: usize,
    pub parallel_sentences: usize,
    pub source_chars: usize,
    pub target_chars: usize,
    /// Mean source length in characters; `None` for an empty corpus.
    pub avg_source_len: Option<f64>,
    /// Mean target length over records that have a target.
    pub avg_target_len: Option<f64>,
    pub by_category: BTreeMap<Category, usize>,
    pub by_era: BTreeMap<Era, usize>,
}

pub fn corpus_stats(records: &[CorpusRecord]) -> StatsReport {
    let mut report = StatsReport::default();
    for r in records {
        report.sentences += 1;
        report.source_chars += r.source.chars().count();
        if let Some(t) = &r.target {
            report.parallel_sentences += 1;
            report.target_chars += t.chars().count();
        }
        *report.by_category.entry(r.category).or_default() += 1;
        if let Some(era) = r.era {
            *report.by_era.entry(era).or_default() += 1;
        }
    }
    let mean = |total: usize, n: usize| (n > 0).then(|| total as f64 / n as f64);
    report.avg_source_len = mean(report.source_chars, report.sentences);
    report.avg_target_len = mean(report.target_chars, report.parallel_sentences);
    report
}
