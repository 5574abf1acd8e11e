use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bleu::{char_bleu, BleuReport};
use super::{BenchmarkSplit, EvalError};
use crate::corpus::CorpusRecord;
use crate::model::{decode, DecodeConfig, ModelParams};
use crate::noising::Tokenizer;

/// Translate every sentence. Sentences are decoded in parallel and returned
/// in input order.
pub fn translate_all<S: AsRef<str> + Sync>(
    params: &ModelParams,
    tok: &Tokenizer,
    sources: &[S],
    cfg: &DecodeConfig,
) -> Result<Vec<String>, EvalError> {
    sources
        .par_iter()
        .map(|s| Ok(tok.decode(&decode(params, &tok.encode(s.as_ref()), cfg)?)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetReport {
    pub name: String,
    pub sentences: usize,
    pub bleu: BleuReport,
    /// Reserved; never computed here.
    pub bertscore: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sets: Vec<SetReport>,
    /// Unweighted mean of the per-set corpus BLEU.
    pub average_bleu: f64,
}

impl EvalReport {
    fn from_sets(sets: Vec<SetReport>) -> Self {
        let average_bleu = if sets.is_empty() {
            0.0
        } else {
            sets.iter().map(|s| s.bleu.corpus_bleu).sum::<f64>() / sets.len() as f64
        };
        Self { sets, average_bleu }
    }

    /// `{"sets": {name: {bleu, precisions, bp, candidate_len, reference_len,
    /// bertscore}}, "average_bleu": x}`.
    pub fn to_json(&self) -> String {
        let mut sets = serde_json::Map::new();
        for s in &self.sets {
            sets.insert(
                s.name.clone(),
                serde_json::json!({
                    "bleu": s.bleu.corpus_bleu,
                    "precisions": s.bleu.ngram_precisions,
                    "bp": s.bleu.brevity_penalty,
                    "candidate_len": s.bleu.candidate_len,
                    "reference_len": s.bleu.reference_len,
                    "sentences": s.sentences,
                    "bertscore": s.bertscore,
                }),
            );
        }
        let v = serde_json::json!({ "sets": sets, "average_bleu": self.average_bleu });
        serde_json::to_string_pretty(&v).expect("report serialises")
    }

    /// One row per set plus the average.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>8} {:>8} {:>6} {:>22}", "set", "sents", "BLEU", "BP", "p1/p2/p3/p4");
        for s in &self.sets {
            let p: Vec<String> = s.bleu.ngram_precisions.iter().map(|v| format!("{:.2}", v)).collect();
            let _ = writeln!(
                out,
                "{:<24} {:>8} {:>8.2} {:>6.3} {:>22}",
                s.name,
                s.sentences,
                s.bleu.corpus_bleu,
                s.bleu.brevity_penalty,
                p.join("/")
            );
        }
        let _ = writeln!(out, "{:<24} {:>8} {:>8.2}", "average", "", self.average_bleu);
        out
    }
}

/// Score references against the outputs of one set.
pub fn score_set(name: &str, hypotheses: &[String], references: &[CorpusRecord]) -> Result<SetReport, EvalError> {
    let refs: Vec<&str> = references
        .iter()
        .map(|r| r.target.as_deref().ok_or_else(|| EvalError::NotParallel(r.id.clone())))
        .collect::<Result<_, _>>()?;
    let hyps: Vec<&str> = hypotheses.iter().map(String::as_str).collect();
    Ok(SetReport { name: name.to_string(), sentences: refs.len(), bleu: char_bleu(&hyps, &refs)?, bertscore: None })
}

/// Decode every record of each named set and score it.
pub fn evaluate_sets(
    params: &ModelParams,
    tok: &Tokenizer,
    sets: &[(String, Vec<CorpusRecord>)],
    cfg: &DecodeConfig,
) -> Result<EvalReport, EvalError> {
    let reports = sets
        .iter()
        .map(|(name, records)| {
            if records.is_empty() {
                return Err(EvalError::EmptySet(name.clone()));
            }
            let sources: Vec<&str> = records.iter().map(|r| r.source.as_str()).collect();
            let hyps = translate_all(params, tok, &sources, cfg)?;
            score_set(name, &hyps, records)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_sets(reports))
}

/// Score the test portion of every split with a model that never saw them.
pub fn evaluate_zero_shot(
    params: &ModelParams,
    tok: &Tokenizer,
    splits: &[BenchmarkSplit],
    cfg: &DecodeConfig,
) -> Result<EvalReport, EvalError> {
    let sets: Vec<(String, Vec<CorpusRecord>)> = splits.iter().map(|s| (s.name.clone(), s.test.clone())).collect();
    evaluate_sets(params, tok, &sets, cfg)
}
