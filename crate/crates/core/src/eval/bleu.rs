use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    /// In `[0, 100]`.
    pub corpus_bleu: f64,
    /// Clipped precisions for n = 1 ..= max_n.
    pub ngram_precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
}

fn counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut m = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *m.entry(w).or_insert(0) += 1;
        }
    }
    m
}

/// Matched and total candidate n-grams of one sentence pair, for
/// n = 1 ..= max_n.
fn sentence_counts<T: Eq + Hash>(cand: &[T], reference: &[T], max_n: usize) -> (Vec<usize>, Vec<usize>) {
    let mut matched = vec![0; max_n];
    let mut total = vec![0; max_n];
    for n in 1..=max_n {
        let r = counts(reference, n);
        for (g, c) in counts(cand, n) {
            matched[n - 1] += c.min(r.get(g).copied().unwrap_or(0));
            total[n - 1] += c;
        }
    }
    (matched, total)
}

/// Corpus-level BLEU with clipped counts, no smoothing and one reference
/// per candidate.
pub fn bleu<T: Eq + Hash>(candidates: &[Vec<T>], references: &[Vec<T>], max_n: usize) -> Result<BleuReport, EvalError> {
    if candidates.len() != references.len() {
        return Err(EvalError::LengthMismatch { candidates: candidates.len(), references: references.len() });
    }
    if candidates.is_empty() || max_n == 0 {
        return Err(EvalError::EmptyInput);
    }
    let mut matches = vec![0; max_n];
    let mut totals = vec![0; max_n];
    let (mut c_len, mut r_len) = (0, 0);
    for (c, r) in candidates.iter().zip(references) {
        let (m, t) = sentence_counts(c, r, max_n);
        for n in 0..max_n {
            matches[n] += m[n];
            totals[n] += t[n];
        }
        c_len += c.len();
        r_len += r.len();
    }
    let ngram_precisions: Vec<f64> = matches
        .iter()
        .zip(&totals)
        .map(|(&m, &t)| if t == 0 { 0.0 } else { m as f64 / t as f64 })
        .collect();
    let brevity_penalty = if c_len == 0 {
        0.0
    } else if c_len < r_len {
        (1.0 - r_len as f64 / c_len as f64).exp()
    } else {
        1.0
    };
    let corpus_bleu = if ngram_precisions.contains(&0.0) {
        0.0
    } else {
        let mean_log = ngram_precisions.iter().map(|p| p.ln()).sum::<f64>() / max_n as f64;
        (brevity_penalty * mean_log.exp() * 100.0).min(100.0)
    };
    Ok(BleuReport {
        corpus_bleu,
        ngram_precisions,
        brevity_penalty,
        candidate_len: c_len,
        reference_len: r_len,
        matches,
        totals,
    })
}

/// Character-level corpus BLEU over strings.
pub fn char_bleu<S: AsRef<str>>(candidates: &[S], references: &[S]) -> Result<BleuReport, EvalError> {
    let split = |v: &[S]| v.iter().map(|s| s.as_ref().chars().collect()).collect::<Vec<Vec<char>>>();
    bleu(&split(candidates), &split(references), 4)
}

/// Sentence BLEU with add-one smoothing on the 2..=4-gram precisions. Meant
/// for inspecting single outputs, not for reporting.
pub fn sentence_bleu(candidate: &str, reference: &str) -> f64 {
    let c: Vec<char> = candidate.chars().collect();
    let r: Vec<char> = reference.chars().collect();
    if c.is_empty() {
        return 0.0;
    }
    let (m, t) = sentence_counts(&c, &r, 4);
    if m[0] == 0 {
        return 0.0;
    }
    let mut log_sum = (m[0] as f64 / t[0] as f64).ln();
    for n in 1..4 {
        log_sum += ((m[n] + 1) as f64 / (t[n] + 1) as f64).ln();
    }
    let bp = if c.len() < r.len() { (1.0 - r.len() as f64 / c.len() as f64).exp() } else { 1.0 };
    100.0 * bp * (log_sum / 4.0).exp()
}
