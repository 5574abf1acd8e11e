use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{segment_target, AlignError, Lexicon, Span};
use crate::corpus::CorpusRecord;

/// A source character position paired with a two-character target word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedPair {
    pub src_index: usize,
    pub tgt_span: Span,
}

/// Monotonic one-to-one alignment for a single translation pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentSet {
    pairs: Vec<AlignedPair>,
}

impl AlignmentSet {
    pub fn pairs(&self) -> &[AlignedPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Builds a set from raw pairs, checking every structural invariant
    /// against the sentences it refers to.
    pub fn from_pairs(pairs: Vec<AlignedPair>, x: &str, y: &str) -> Result<Self, String> {
        let set = Self { pairs };
        set.check(x, y)?;
        Ok(set)
    }

    /// Checks span width, monotonicity, bounds and the shared-character rule.
    pub fn check(&self, x: &str, y: &str) -> Result<(), String> {
        let xc: Vec<char> = x.chars().collect();
        let yc: Vec<char> = y.chars().collect();
        for (k, p) in self.pairs.iter().enumerate() {
            if p.tgt_span.len() != 2 {
                return Err(format!("pair {k}: target span is not two characters"));
            }
            if p.src_index >= xc.len() || p.tgt_span.end > yc.len() {
                return Err(format!("pair {k}: out of bounds"));
            }
            if !yc[p.tgt_span.start..p.tgt_span.end].contains(&xc[p.src_index]) {
                return Err(format!("pair {k}: no shared character"));
            }
            if k > 0 {
                let prev = &self.pairs[k - 1];
                if p.src_index <= prev.src_index {
                    return Err(format!("pair {k}: source index not increasing"));
                }
                if p.tgt_span.start < prev.tgt_span.end {
                    return Err(format!("pair {k}: target spans overlap or go backwards"));
                }
            }
        }
        Ok(())
    }

    /// `[[src_idx, tgt_start], ...]`, the form used in alignment dumps.
    pub fn to_index_pairs(&self) -> Vec<[usize; 2]> {
        self.pairs.iter().map(|p| [p.src_index, p.tgt_span.start]).collect()
    }
}

fn check_partition(segments: &[Span], len: usize) -> Result<(), AlignError> {
    let mut pos = 0;
    for s in segments {
        if s.start != pos || s.end <= s.start {
            return Err(AlignError::InvalidSegments(format!(
                "segment {}..{} does not continue at {pos}",
                s.start, s.end
            )));
        }
        pos = s.end;
    }
    if pos != len {
        return Err(AlignError::InvalidSegments(format!(
            "segments cover {pos} of {len} characters"
        )));
    }
    Ok(())
}

/// Greedy left-to-right alignment.
///
/// Only two-character target words that do not occur verbatim in `x`
/// qualify. Source positions are scanned in order; each takes the leftmost
/// qualifying word that contains its character and starts after the
/// previously matched word.
pub fn align_pair(x: &str, y: &str, segments: &[Span]) -> Result<AlignmentSet, AlignError> {
    let xc: Vec<char> = x.chars().collect();
    let yc: Vec<char> = y.chars().collect();
    check_partition(segments, yc.len())?;

    // char -> indices (into `segments`) of qualifying words containing it
    let mut by_char: HashMap<char, Vec<usize>> = HashMap::new();
    for (idx, s) in segments.iter().enumerate() {
        if s.len() != 2 {
            continue;
        }
        let word: String = yc[s.start..s.end].iter().collect();
        if x.contains(&word) {
            continue;
        }
        let (a, b) = (yc[s.start], yc[s.start + 1]);
        by_char.entry(a).or_default().push(idx);
        if b != a {
            by_char.entry(b).or_default().push(idx);
        }
    }

    let mut pairs = Vec::new();
    let mut next_word = 0usize; // first segment index still available
    for (i, c) in xc.iter().enumerate() {
        let Some(cands) = by_char.get(c) else { continue };
        let k = cands.partition_point(|&w| w < next_word);
        if let Some(&w) = cands.get(k) {
            pairs.push(AlignedPair {
                src_index: i,
                tgt_span: segments[w],
            });
            next_word = w + 1;
        }
    }
    Ok(AlignmentSet { pairs })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Fraction of pairs with at least one alignment.
    pub pairs_with_alignment: f64,
    /// Mean over pairs of the fraction of aligned source characters.
    pub mean_src_aligned: f64,
}

pub fn alignment_coverage(corpus: &[CorpusRecord], lex: &Lexicon) -> Result<Coverage, AlignError> {
    if corpus.is_empty() {
        return Err(AlignError::EmptyCorpus);
    }
    let mut with_alignment = 0usize;
    let mut frac_sum = 0.0;
    for r in corpus {
        let y = r
            .target
            .as_deref()
            .ok_or_else(|| AlignError::NotParallel(r.id.clone()))?;
        let set = align_pair(&r.source, y, &segment_target(y, lex))?;
        if !set.is_empty() {
            with_alignment += 1;
        }
        let n = r.source.chars().count();
        if n > 0 {
            frac_sum += set.len() as f64 / n as f64;
        }
    }
    let n = corpus.len() as f64;
    Ok(Coverage {
        pairs_with_alignment: with_alignment as f64 / n,
        mean_src_aligned: frac_sum / n,
    })
}
