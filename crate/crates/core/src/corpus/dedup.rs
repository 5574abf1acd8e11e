//! Near-duplicate removal.
//!
//! Pairs whose estimated similarity reaches the threshold are linked, linked
//! records form clusters (connected components), and each cluster keeps the
//! record with the lexicographically smallest id.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minhash::MinHasher;
use super::{estimate_similarity, CorpusError, CorpusRecord, MinHashSignature};

/// Which side of a record is compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DedupKey {
    #[default]
    Source,
    Target,
    /// Source and target concatenated.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DedupConfig {
    pub threshold: f64,
    pub num_perm: usize,
    pub shingle_size: usize,
    pub seed: u64,
    pub key: DedupKey,
    /// Number of LSH bands. `None` compares all pairs.
    pub lsh_bands: Option<usize>,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            num_perm: 128,
            shingle_size: 4,
            seed: 0,
            key: DedupKey::Source,
            lsh_bands: None,
        }
    }
}

impl DedupConfig {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(CorpusError::InvalidParameter(format!(
                "threshold {} outside (0, 1]",
                self.threshold
            )));
        }
        if self.num_perm == 0 || self.shingle_size == 0 {
            return Err(CorpusError::InvalidParameter(
                "num_perm and shingle_size must be positive".into(),
            ));
        }
        if let Some(b) = self.lsh_bands {
            if b == 0 || !self.num_perm.is_multiple_of(b) {
                return Err(CorpusError::InvalidParameter(format!(
                    "lsh_bands {b} must divide num_perm {}",
                    self.num_perm
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DuplicatePair {
    pub kept: String,
    pub dropped: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DedupOutcome {
    pub kept: Vec<CorpusRecord>,
    pub dropped: Vec<DuplicatePair>,
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

fn key_text(record: &CorpusRecord, key: DedupKey) -> String {
    let tgt = record.target.as_deref().unwrap_or("");
    match key {
        DedupKey::Source => record.source.clone(),
        DedupKey::Target => tgt.to_string(),
        DedupKey::Both => format!("{}{}", record.source, tgt),
    }
}

enum Sketch {
    Signature(MinHashSignature),
    /// Texts shorter than one shingle are only matched by exact equality.
    Short(String),
}

pub fn deduplicate(records: &[CorpusRecord], cfg: &DedupConfig) -> Result<DedupOutcome, CorpusError> {
    cfg.validate()?;
    let hasher = MinHasher::new(cfg.num_perm, cfg.shingle_size, cfg.seed)?;
    let sketches: Vec<Sketch> = records
        .par_iter()
        .map(|r| {
            let text = key_text(r, cfg.key);
            if text.chars().count() < hasher.shingle_size() {
                Sketch::Short(text)
            } else {
                Sketch::Signature(hasher.signature(&text).expect("length checked"))
            }
        })
        .collect();

    let sim = |i: usize, j: usize| -> f64 {
        match (&sketches[i], &sketches[j]) {
            (Sketch::Signature(a), Sketch::Signature(b)) => {
                estimate_similarity(a, b).expect("signatures share one hasher")
            }
            (Sketch::Short(a), Sketch::Short(b)) if a == b => 1.0,
            _ => 0.0,
        }
    };

    let n = records.len();
    let mut sets = DisjointSet::new(n);
    for (i, j) in candidate_pairs(&sketches, cfg.lsh_bands) {
        if sim(i, j) >= cfg.threshold {
            sets.union(i, j);
        }
    }

    // representative: smallest id, then earliest position
    let mut rep: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = sets.find(i);
        let entry = rep.entry(root).or_insert(i);
        if (records[i].id.as_str(), i) < (records[*entry].id.as_str(), *entry) {
            *entry = i;
        }
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, record) in records.iter().enumerate() {
        let r = rep[&sets.find(i)];
        if r == i {
            kept.push(record.clone());
        } else {
            dropped.push(DuplicatePair {
                kept: records[r].id.clone(),
                dropped: record.id.clone(),
                similarity: sim(r, i),
            });
        }
    }
    Ok(DedupOutcome { kept, dropped })
}

fn candidate_pairs(sketches: &[Sketch], lsh_bands: Option<usize>) -> Vec<(usize, usize)> {
    let n = sketches.len();
    let mut pairs = Vec::new();

    // exact buckets for short texts
    let mut short: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in sketches.iter().enumerate() {
        if let Sketch::Short(t) = s {
            short.entry(t.as_str()).or_default().push(i);
        }
    }
    for group in short.values() {
        for w in group.windows(2) {
            pairs.push((w[0], w[1]));
        }
    }

    let long: Vec<(usize, &MinHashSignature)> = sketches
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match s {
            Sketch::Signature(sig) => Some((i, sig)),
            Sketch::Short(_) => None,
        })
        .collect();

    match lsh_bands {
        None => {
            for (a, &(i, _)) in long.iter().enumerate() {
                for &(j, _) in &long[a + 1..] {
                    pairs.push((i, j));
                }
            }
        }
        Some(bands) => {
            let mut seen = vec![Vec::<usize>::new(); n];
            for band in 0..bands {
                let mut buckets: HashMap<&[u64], Vec<usize>> = HashMap::new();
                for &(i, sig) in &long {
                    let rows = sig.num_perm() / bands;
                    buckets
                        .entry(&sig.values()[band * rows..(band + 1) * rows])
                        .or_default()
                        .push(i);
                }
                for bucket in buckets.values() {
                    for (a, &i) in bucket.iter().enumerate() {
                        for &j in &bucket[a + 1..] {
                            seen[i].push(j);
                        }
                    }
                }
            }
            for (i, mut js) in seen.into_iter().enumerate() {
                js.sort_unstable();
                js.dedup();
                pairs.extend(js.into_iter().map(|j| (i, j)));
            }
        }
    }
    pairs
}
