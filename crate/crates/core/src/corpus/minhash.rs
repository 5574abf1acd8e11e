//! MinHash signatures over character shingles.
//!
//! Each shingle is reduced to a 64-bit key, then pushed through `num_perm`
//! universal hash functions `h_i(x) = (a_i * x + b_i) mod (2^61 - 1)`. The
//! fraction of positions where two signatures agree estimates the Jaccard
//! similarity of the underlying shingle sets.

use std::collections::HashSet;

use rand::Rng;

use super::CorpusError;
use crate::rng::{fnv1a, mix64, substream};

const MERSENNE_61: u64 = (1 << 61) - 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinHashSignature {
    values: Vec<u64>,
    shingle_size: usize,
    seed: u64,
}

impl MinHashSignature {
    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn num_perm(&self) -> usize {
        self.values.len()
    }

    pub fn shingle_size(&self) -> usize {
        self.shingle_size
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Seeded family of hash functions, reusable across many texts.
#[derive(Debug, Clone)]
pub(crate) struct MinHasher {
    coeffs: Vec<(u64, u64)>,
    shingle_size: usize,
    seed: u64,
}

impl MinHasher {
    pub(crate) fn new(num_perm: usize, shingle_size: usize, seed: u64) -> Result<Self, CorpusError> {
        if num_perm == 0 {
            return Err(CorpusError::InvalidParameter("num_perm must be positive".into()));
        }
        if shingle_size == 0 {
            return Err(CorpusError::InvalidParameter("shingle_size must be positive".into()));
        }
        let mut rng = substream(seed, &[b"minhash"]);
        let coeffs = (0..num_perm)
            .map(|_| (rng.gen_range(1..MERSENNE_61), rng.gen_range(0..MERSENNE_61)))
            .collect();
        Ok(Self {
            coeffs,
            shingle_size,
            seed,
        })
    }

    pub(crate) fn shingle_size(&self) -> usize {
        self.shingle_size
    }

    pub(crate) fn signature(&self, text: &str) -> Result<MinHashSignature, CorpusError> {
        let chars: Vec<char> = text.chars().collect();
        if chars.len() < self.shingle_size {
            return Err(CorpusError::TextTooShort {
                len: chars.len(),
                shingle_size: self.shingle_size,
            });
        }
        let mut keys: Vec<u64> = chars
            .windows(self.shingle_size)
            .map(shingle_key)
            .collect();
        keys.sort_unstable();
        keys.dedup();

        let values = self
            .coeffs
            .iter()
            .map(|&(a, b)| {
                keys.iter()
                    .map(|&x| universal_hash(a, b, x))
                    .min()
                    .expect("at least one shingle")
            })
            .collect();
        Ok(MinHashSignature {
            values,
            shingle_size: self.shingle_size,
            seed: self.seed,
        })
    }
}

fn shingle_key(window: &[char]) -> u64 {
    let mut bytes = Vec::with_capacity(window.len() * 4);
    for c in window {
        bytes.extend_from_slice(&(*c as u32).to_le_bytes());
    }
    mix64(fnv1a(&bytes)) % MERSENNE_61
}

fn universal_hash(a: u64, b: u64, x: u64) -> u64 {
    let prod = u128::from(a) * u128::from(x) + u128::from(b);
    // fold modulo 2^61 - 1
    let lo = (prod & u128::from(MERSENNE_61)) as u64;
    let hi = (prod >> 61) as u64;
    let mut r = lo + hi;
    while r >= MERSENNE_61 {
        r -= MERSENNE_61;
    }
    r
}

pub fn minhash_signature(
    text: &str,
    num_perm: usize,
    shingle_size: usize,
    seed: u64,
) -> Result<MinHashSignature, CorpusError> {
    MinHasher::new(num_perm, shingle_size, seed)?.signature(text)
}

pub fn estimate_similarity(a: &MinHashSignature, b: &MinHashSignature) -> Result<f64, CorpusError> {
    if a.num_perm() != b.num_perm() {
        return Err(CorpusError::SignatureMismatch(format!(
            "num_perm {} vs {}",
            a.num_perm(),
            b.num_perm()
        )));
    }
    if a.shingle_size != b.shingle_size {
        return Err(CorpusError::SignatureMismatch(format!(
            "shingle_size {} vs {}",
            a.shingle_size, b.shingle_size
        )));
    }
    if a.seed != b.seed {
        return Err(CorpusError::SignatureMismatch(format!("seed {} vs {}", a.seed, b.seed)));
    }
    let agree = a.values.iter().zip(&b.values).filter(|(x, y)| x == y).count();
    Ok(agree as f64 / a.num_perm() as f64)
}

/// Set of character `k`-grams of `text`.
pub fn shingles(text: &str, k: usize) -> HashSet<String> {
    let chars: Vec<char> = text.chars().collect();
    if k == 0 || chars.len() < k {
        return HashSet::new();
    }
    chars.windows(k).map(|w| w.iter().collect()).collect()
}

/// Exact Jaccard similarity of the `k`-shingle sets.
pub fn exact_jaccard(a: &str, b: &str, k: usize) -> f64 {
    let sa = shingles(a, k);
    let sb = shingles(b, k);
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_texts_agree_everywhere() {
        let a = minhash_signature("学而时习之不亦说乎", 128, 4, 1).unwrap();
        let b = minhash_signature("学而时习之不亦说乎", 128, 4, 1).unwrap();
        assert_eq!(a, b);
        assert_eq!(estimate_similarity(&a, &b).unwrap(), 1.0);
        assert_eq!(a.values().len(), 128);
    }

    #[test]
    fn disjoint_shingles_estimate_near_zero() {
        let a = minhash_signature("甲乙丙丁戊", 256, 2, 9).unwrap();
        let b = minhash_signature("子丑寅卯辰", 256, 2, 9).unwrap();
        assert!(estimate_similarity(&a, &b).unwrap() <= 0.05);
    }

    #[test]
    fn too_short_and_mismatch_errors() {
        assert_eq!(
            minhash_signature("甲乙", 8, 3, 0),
            Err(CorpusError::TextTooShort { len: 2, shingle_size: 3 })
        );
        let a = minhash_signature("甲乙丙丁", 8, 2, 0).unwrap();
        let b = minhash_signature("甲乙丙丁", 16, 2, 0).unwrap();
        let c = minhash_signature("甲乙丙丁", 8, 3, 0).unwrap();
        let d = minhash_signature("甲乙丙丁", 8, 2, 1).unwrap();
        assert!(matches!(estimate_similarity(&a, &b), Err(CorpusError::SignatureMismatch(_))));
        assert!(matches!(estimate_similarity(&a, &c), Err(CorpusError::SignatureMismatch(_))));
        assert!(matches!(estimate_similarity(&a, &d), Err(CorpusError::SignatureMismatch(_))));
    }

    #[test]
    fn universal_hash_matches_naive_modulus() {
        for &(a, b, x) in &[(3u64, 5u64, 7u64), (MERSENNE_61 - 1, MERSENNE_61 - 2, MERSENNE_61 - 1), (1 << 40, 17, 1 << 60)] {
            let naive = ((u128::from(a) * u128::from(x) + u128::from(b)) % u128::from(MERSENNE_61)) as u64;
            assert_eq!(universal_hash(a, b, x), naive);
        }
    }
}
