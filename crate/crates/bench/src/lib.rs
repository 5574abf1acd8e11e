//! Deterministic synthetic inputs shared by the benchmarks.

use guwen_core::{CorpusRecord, Lexicon};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// First `n` characters of the CJK Unified Ideographs block.
fn alphabet(offset: u32, n: u32) -> Vec<char> {
    (0x4E00 + offset..0x4E00 + offset + n).filter_map(char::from_u32).collect()
}

pub fn random_text(rng: &mut impl Rng, chars: &[char], len: usize) -> String {
    (0..len).map(|_| *chars.choose(rng).expect("non-empty alphabet")).collect()
}

/// `n` source-only records of length `len`; every fifth one is a copy of an
/// earlier record with two characters changed.
pub fn near_duplicate_corpus(n: usize, len: usize, seed: u64) -> Vec<CorpusRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chars = alphabet(0, 400);
    let mut texts: Vec<String> = Vec::with_capacity(n);
    for i in 0..n {
        let text = if i % 5 == 4 {
            let mut cs: Vec<char> = texts[rng.gen_range(0..i)].chars().collect();
            for _ in 0..2 {
                let k = rng.gen_range(0..cs.len());
                cs[k] = *chars.choose(&mut rng).expect("non-empty alphabet");
            }
            cs.into_iter().collect()
        } else {
            random_text(&mut rng, &chars, len)
        };
        texts.push(text);
    }
    texts.into_iter().enumerate().map(|(i, t)| CorpusRecord::pair(format!("r{i:06}"), t, "")).collect()
}

/// Parallel pairs where about half of the source characters expand into a
/// two-character word of the returned lexicon.
pub fn aligned_corpus(n: usize, len: usize, seed: u64) -> (Vec<CorpusRecord>, Lexicon) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ancient = alphabet(0, 300);
    let prefixes = alphabet(1000, 20);
    let mut words = Vec::new();
    let records = (0..n)
        .map(|i| {
            let src = random_text(&mut rng, &ancient, len);
            let mut tgt = String::new();
            for c in src.chars() {
                if rng.gen_bool(0.5) {
                    let word: String = [*prefixes.choose(&mut rng).expect("non-empty"), c].iter().collect();
                    tgt.push_str(&word);
                    words.push(word);
                } else {
                    tgt.push(c);
                }
            }
            CorpusRecord::pair(format!("p{i:06}"), src, tgt)
        })
        .collect();
    words.sort();
    words.dedup();
    (records, Lexicon::new(words).expect("words are non-empty"))
}

/// Candidate and reference sentences with roughly 70% of characters shared.
pub fn bleu_pairs(n: usize, len: usize, seed: u64) -> (Vec<String>, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chars = alphabet(0, 200);
    let refs: Vec<String> = (0..n).map(|_| random_text(&mut rng, &chars, len)).collect();
    let cands = refs
        .iter()
        .map(|r| {
            r.chars()
                .map(|c| if rng.gen_bool(0.7) { c } else { *chars.choose(&mut rng).expect("non-empty") })
                .collect()
        })
        .collect();
    (cands, refs)
}
