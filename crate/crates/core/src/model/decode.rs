use serde::{Deserialize, Serialize};

use super::graph::Graph;
use super::transformer::{ar_logits, check_lengths, decode as run_decoder, encode};
use super::{ModelError, ModelParams, Tensor};
use crate::noising::{BOS, EOS, MASK, PAD, UNK};

/// `beam_size = 1` is greedy search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_size: usize,
    pub max_decode_len: usize,
    /// Finished hypotheses are ranked by `log_prob / len^length_penalty`.
    pub length_penalty: f64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self { beam_size: 1, max_decode_len: 64, length_penalty: 1.0 }
    }
}

impl DecodeConfig {
    pub fn greedy(max_decode_len: usize) -> Self {
        Self { beam_size: 1, max_decode_len, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.beam_size == 0 {
            return Err(ModelError::InvalidConfig("beam_size must be positive".into()));
        }
        if !(self.length_penalty >= 0.0) {
            return Err(ModelError::InvalidConfig("length_penalty must be non-negative".into()));
        }
        Ok(())
    }
}

const FORBIDDEN: [u32; 4] = [PAD, BOS, UNK, MASK];

struct Hyp {
    tokens: Vec<u32>,
    score: f64,
}

/// Translate one source sequence. The result has no BOS or EOS.
pub fn decode(params: &ModelParams, src: &[u32], cfg: &DecodeConfig) -> Result<Vec<u32>, ModelError> {
    cfg.validate()?;
    check_lengths(params, &[src])?;
    // Target positions are bounded by the learned position table.
    let limit = cfg.max_decode_len.min(params.hyperparams().max_len - 1);
    if limit == 0 {
        return Ok(Vec::new());
    }
    let mut g = Graph::new(params);
    let (enc, _) = encode(&mut g, &[src])?;
    let enc = g.value(enc).clone();

    let mut beams = vec![Hyp { tokens: vec![BOS], score: 0.0 }];
    let mut finished: Vec<Hyp> = Vec::new();
    for _ in 0..limit {
        let next = next_log_probs(params, &enc, &beams)?;
        let mut cands: Vec<(f64, usize, u32)> = Vec::new();
        for (b, hyp) in beams.iter().enumerate() {
            for (t, &lp) in next.row(b).iter().enumerate() {
                if !FORBIDDEN.contains(&(t as u32)) {
                    cands.push((hyp.score + lp, b, t as u32));
                }
            }
        }
        // Highest score first; ties resolved towards the earlier beam and
        // the lower token id.
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut new_beams = Vec::with_capacity(cfg.beam_size);
        for (score, b, t) in cands {
            if new_beams.len() + finished.len() >= cfg.beam_size {
                break;
            }
            let mut tokens = beams[b].tokens.clone();
            if t == EOS {
                finished.push(Hyp { tokens, score });
            } else {
                tokens.push(t);
                new_beams.push(Hyp { tokens, score });
            }
        }
        if finished.len() >= cfg.beam_size || new_beams.is_empty() {
            beams = new_beams;
            break;
        }
        beams = new_beams;
    }
    finished.extend(beams);
    let norm = |h: &Hyp| {
        // Length counts generated tokens including EOS.
        let len = h.tokens.len() as f64;
        h.score / len.powf(cfg.length_penalty)
    };
    let best = finished
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| norm(a).total_cmp(&norm(b)).then(j.cmp(i)))
        .map(|(_, h)| h)
        .expect("at least one hypothesis");
    Ok(best.tokens[1..].to_vec())
}

/// Log-probabilities of the next token for every live hypothesis.
fn next_log_probs(params: &ModelParams, enc: &Tensor, beams: &[Hyp]) -> Result<Tensor, ModelError> {
    let mut g = Graph::new(params);
    let n = enc.rows();
    let mut data = Vec::with_capacity(n * enc.cols() * beams.len());
    for _ in beams {
        data.extend_from_slice(enc.data());
    }
    let enc_var = g.constant(Tensor::new(vec![n * beams.len(), enc.cols()], data));
    let enc_segs: Vec<_> = (0..beams.len())
        .map(|b| super::transformer::Segment { start: b * n, len: n })
        .collect();
    let prefixes: Vec<&[u32]> = beams.iter().map(|h| h.tokens.as_slice()).collect();
    let (h, segs) = run_decoder(&mut g, enc_var, &enc_segs, &prefixes, true)?;
    let last: Vec<usize> = segs.iter().map(|s| s.start + s.len - 1).collect();
    let rows = g.gather(h, last);
    let logits = ar_logits(&mut g, rows);
    let lp = g.log_softmax(logits);
    Ok(g.value(lp).clone())
}

/// Step-by-step argmax decoding, kept separate from the beam search so the
/// two can be checked against each other.
pub fn greedy_decode(params: &ModelParams, src: &[u32], max_decode_len: usize) -> Result<Vec<u32>, ModelError> {
    check_lengths(params, &[src])?;
    let limit = max_decode_len.min(params.hyperparams().max_len - 1);
    let mut g = Graph::new(params);
    let (enc, _) = encode(&mut g, &[src])?;
    let enc = g.value(enc).clone();
    let mut hyp = Hyp { tokens: vec![BOS], score: 0.0 };
    for _ in 0..limit {
        let lp = next_log_probs(params, &enc, std::slice::from_ref(&hyp))?;
        let mut best: Option<(u32, f64)> = None;
        for (t, &v) in lp.row(0).iter().enumerate() {
            let t = t as u32;
            if FORBIDDEN.contains(&t) {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
        let (t, v) = best.expect("vocabulary has ordinary tokens");
        if t == EOS {
            break;
        }
        hyp.tokens.push(t);
        hyp.score += v;
    }
    Ok(hyp.tokens[1..].to_vec())
}
