//! Shared fixtures and independent reference implementations.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use guwen_core::corpus::io::read_corpus;
use guwen_core::corpus::io::PlainTextDefaults;
use guwen_core::model::{objective_value, Gradients, Hyperparams, ModelParams, Objective};
use guwen_core::noising::{make_dmlm, DasExample, DmlmExample, NoiseConfig, BOS, EOS};
use guwen_core::{CorpusRecord, Lexicon};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data")
}

pub fn toy_corpus() -> Vec<CorpusRecord> {
    let out = read_corpus(&data_dir().join("toy/clean.jsonl"), &PlainTextDefaults::default()).unwrap();
    assert!(out.errors.is_empty());
    out.records
}

pub fn toy_raw() -> Vec<CorpusRecord> {
    let out = read_corpus(&data_dir().join("toy/raw.jsonl"), &PlainTextDefaults::default()).unwrap();
    assert!(out.errors.is_empty());
    out.records
}

pub fn toy_lexicon() -> Lexicon {
    Lexicon::load(&data_dir().join("toy/lexicon.txt")).unwrap()
}

pub fn probe_hp(vocab_size: usize) -> Hyperparams {
    Hyperparams { vocab_size, d_model: 8, n_enc_layers: 1, n_dec_layers: 1, n_heads: 2, d_ff: 16, max_len: 12 }
}

fn random_tokens(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> Vec<u32> {
    (0..len).map(|_| rng.gen_range(5..vocab as u32)).collect()
}

/// Two-example batches for the probe model.
pub fn probe_batches(vocab: usize, seed: u64) -> (Vec<DasExample>, Vec<DmlmExample>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut das = Vec::new();
    let mut dmlm = Vec::new();
    for (sl, tl) in [(5, 6), (3, 4)] {
        let src = random_tokens(&mut rng, vocab, sl);
        let mut tgt = vec![BOS];
        tgt.extend(random_tokens(&mut rng, vocab, tl));
        tgt.push(EOS);
        dmlm.push(make_dmlm(&src, &tgt, vocab, &NoiseConfig::default(), &mut rng).unwrap());
        das.push(DasExample::plain(src, tgt));
    }
    (das, dmlm)
}

/// Central finite-difference gradient of an objective, element by element.
pub fn finite_difference(params: &ModelParams, objective: Objective, step: f64) -> Gradients {
    let mut grads = Gradients::zeros_like(params);
    let mut p = params.clone();
    for (b, block) in params.blocks().iter().enumerate() {
        for j in 0..block.tensor.numel() {
            let orig = block.tensor.data()[j];
            p.blocks_mut()[b].tensor.data_mut()[j] = orig + step;
            let up = objective_value(&p, objective).unwrap().total;
            p.blocks_mut()[b].tensor.data_mut()[j] = orig - step;
            let down = objective_value(&p, objective).unwrap().total;
            p.blocks_mut()[b].tensor.data_mut()[j] = orig;
            grads.blocks[b].data_mut()[j] = (up - down) / (2.0 * step);
        }
    }
    grads
}

/// `|a - n| / (|a| + |n|)` per block, by Euclidean norm. Blocks whose
/// gradients are both at round-off level count as agreeing.
pub fn block_relative_errors(params: &ModelParams, analytic: &Gradients, numeric: &Gradients) -> Vec<(String, f64)> {
    params
        .blocks()
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let a = analytic.blocks[i].data();
            let n = numeric.blocks[i].data();
            let diff: f64 = a.iter().zip(n).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt() + n.iter().map(|x| x * x).sum::<f64>().sqrt();
            let err = if scale < 1e-9 { 0.0 } else { diff / scale };
            (b.name.clone(), err)
        })
        .collect()
}

fn ngrams(tokens: &[char], n: usize) -> Vec<&[char]> {
    if tokens.len() < n {
        return Vec::new();
    }
    (0..=tokens.len() - n).map(|i| &tokens[i..i + n]).collect()
}

/// Corpus BLEU by direct counting: for every candidate n-gram, scan the
/// reference for matches, consuming each reference occurrence at most once.
pub fn naive_bleu(cands: &[Vec<char>], refs: &[Vec<char>]) -> f64 {
    let mut matched = [0usize; 4];
    let mut total = [0usize; 4];
    let (mut c_len, mut r_len) = (0, 0);
    for (c, r) in cands.iter().zip(refs) {
        c_len += c.len();
        r_len += r.len();
        for n in 1..=4 {
            let cg = ngrams(c, n);
            let rg = ngrams(r, n);
            let mut used = vec![false; rg.len()];
            total[n - 1] += cg.len();
            for g in &cg {
                if let Some(k) = (0..rg.len()).find(|&k| !used[k] && rg[k] == *g) {
                    used[k] = true;
                    matched[n - 1] += 1;
                }
            }
        }
    }
    if matched.iter().any(|&m| m == 0) || c_len == 0 {
        return 0.0;
    }
    let log_p: f64 = (0..4).map(|i| (matched[i] as f64 / total[i] as f64).ln()).sum::<f64>() / 4.0;
    let bp = if c_len < r_len { (1.0 - r_len as f64 / c_len as f64).exp() } else { 1.0 };
    100.0 * bp * log_p.exp()
}

/// Union-find clusters of records whose exact shingle Jaccard is at least
/// `threshold`, as sorted lists of indices.
pub fn exact_clusters(texts: &[String], k: usize, threshold: f64) -> Vec<Vec<usize>> {
    let sets: Vec<std::collections::HashSet<String>> = texts
        .iter()
        .map(|t| {
            let c: Vec<char> = t.chars().collect();
            if c.len() < k {
                return std::iter::once(t.clone()).collect();
            }
            c.windows(k).map(|w| w.iter().collect()).collect()
        })
        .collect();
    let mut parent: Vec<usize> = (0..texts.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for i in 0..texts.len() {
        for j in i + 1..texts.len() {
            let inter = sets[i].intersection(&sets[j]).count() as f64;
            let union = sets[i].union(&sets[j]).count() as f64;
            if inter / union >= threshold {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..texts.len() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}
