//! Pre-norm encoder-decoder over packed sequences.
//!
//! A batch of sequences is concatenated row-wise; attention is restricted to
//! each sequence's own rows through [`AttnSpan`]s, so one matrix product
//! serves the whole batch.

use super::graph::{AttnSpan, Graph, Var};
use super::params::{AttnIds, FfnIds, ModelParams, NormIds};
use super::{ModelError, Tensor};

/// Rows `start..start + len` of a packed activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

pub(crate) fn segments<T>(seqs: &[&[T]]) -> Vec<Segment> {
    let mut start = 0;
    seqs.iter()
        .map(|s| {
            let seg = Segment { start, len: s.len() };
            start += s.len();
            seg
        })
        .collect()
}

pub(crate) fn check_lengths(params: &ModelParams, seqs: &[&[u32]]) -> Result<(), ModelError> {
    let hp = params.hyperparams();
    for s in seqs {
        if s.len() > hp.max_len {
            return Err(ModelError::SequenceTooLong { len: s.len(), max: hp.max_len });
        }
        if let Some(&t) = s.iter().find(|&&t| t as usize >= hp.vocab_size) {
            return Err(ModelError::InvalidToken { id: t, vocab_size: hp.vocab_size });
        }
    }
    Ok(())
}

fn audit(g: &Graph, v: Var, rows: usize, cols: usize, what: &str) -> Result<(), ModelError> {
    let s = g.shape(v);
    if s != [rows, cols] {
        return Err(ModelError::Shape(format!("{what}: expected [{rows}, {cols}], got {s:?}")));
    }
    Ok(())
}

fn norm(g: &mut Graph, x: Var, ids: NormIds) -> Var {
    let gamma = g.param(ids.gamma);
    let beta = g.param(ids.beta);
    g.layer_norm(x, gamma, beta)
}

fn dense(g: &mut Graph, x: Var, w: super::params::ParamId, b: super::params::ParamId) -> Var {
    let w = g.param(w);
    let b = g.param(b);
    g.linear(x, w, b)
}

fn attention(g: &mut Graph, xq: Var, xkv: Var, ids: AttnIds, spans: Vec<AttnSpan>, causal: bool) -> Var {
    let heads = g.params().hyperparams().n_heads;
    let q = dense(g, xq, ids.wq, ids.bq);
    let k = dense(g, xkv, ids.wk, ids.bk);
    let v = dense(g, xkv, ids.wv, ids.bv);
    let a = g.attention(q, k, v, heads, spans, causal);
    dense(g, a, ids.wo, ids.bo)
}

fn ffn(g: &mut Graph, x: Var, ids: FfnIds) -> Var {
    let h = dense(g, x, ids.w1, ids.b1);
    let h = g.gelu(h);
    dense(g, h, ids.w2, ids.b2)
}

fn embed(g: &mut Graph, seqs: &[&[u32]], pos_table: super::params::ParamId) -> Var {
    let ids: Vec<usize> = seqs.iter().flat_map(|s| s.iter().map(|&t| t as usize)).collect();
    let pos: Vec<usize> = seqs.iter().flat_map(|s| 0..s.len()).collect();
    let table = g.param(g.params().layout().embed);
    let tok = g.gather(table, ids);
    let ptable = g.param(pos_table);
    let p = g.gather(ptable, pos);
    g.add(tok, p)
}

fn self_spans(segs: &[Segment]) -> Vec<AttnSpan> {
    segs.iter()
        .map(|s| AttnSpan { q_start: s.start, q_len: s.len, k_start: s.start, k_len: s.len })
        .collect()
}

/// Encoder states after the final norm, one row per source token.
pub(crate) fn encode(g: &mut Graph, src: &[&[u32]]) -> Result<(Var, Vec<Segment>), ModelError> {
    check_lengths(g.params(), src)?;
    let params = g.params();
    let d = params.hyperparams().d_model;
    let layout = params.layout();
    let segs = segments(src);
    let rows: usize = src.iter().map(|s| s.len()).sum();
    let mut h = embed(g, src, layout.enc_pos);
    audit(g, h, rows, d, "encoder embedding")?;
    for (l, layer) in layout.enc_layers.iter().enumerate() {
        let x = norm(g, h, layer.ln_attn);
        let a = attention(g, x, x, layer.attn, self_spans(&segs), false);
        h = g.add(h, a);
        let x = norm(g, h, layer.ln_ffn);
        let f = ffn(g, x, layer.ffn);
        h = g.add(h, f);
        audit(g, h, rows, d, &format!("encoder layer {l}"))?;
    }
    let out = norm(g, h, layout.enc_ln);
    Ok((out, segs))
}

/// Decoder states after the final norm. `causal` selects the generation
/// mode; otherwise every target position sees the whole target.
pub(crate) fn decode(
    g: &mut Graph,
    enc: Var,
    enc_segs: &[Segment],
    tgt: &[&[u32]],
    causal: bool,
) -> Result<(Var, Vec<Segment>), ModelError> {
    check_lengths(g.params(), tgt)?;
    if enc_segs.len() != tgt.len() {
        return Err(ModelError::Shape(format!(
            "{} source sequences for {} target sequences",
            enc_segs.len(),
            tgt.len()
        )));
    }
    let params = g.params();
    let d = params.hyperparams().d_model;
    let layout = params.layout();
    let segs = segments(tgt);
    let rows: usize = tgt.iter().map(|s| s.len()).sum();
    let cross: Vec<AttnSpan> = segs
        .iter()
        .zip(enc_segs)
        .map(|(t, s)| AttnSpan { q_start: t.start, q_len: t.len, k_start: s.start, k_len: s.len })
        .collect();
    let mut h = embed(g, tgt, layout.dec_pos);
    audit(g, h, rows, d, "decoder embedding")?;
    for (l, layer) in layout.dec_layers.iter().enumerate() {
        let x = norm(g, h, layer.ln_self);
        let a = attention(g, x, x, layer.self_attn, self_spans(&segs), causal);
        h = g.add(h, a);
        let x = norm(g, h, layer.ln_cross);
        let c = attention(g, x, enc, layer.cross_attn, cross.clone(), false);
        h = g.add(h, c);
        let x = norm(g, h, layer.ln_ffn);
        let f = ffn(g, x, layer.ffn);
        h = g.add(h, f);
        audit(g, h, rows, d, &format!("decoder layer {l}"))?;
    }
    let out = norm(g, h, layout.dec_ln);
    Ok((out, segs))
}

/// Tied generation head: `h * E^T`.
pub(crate) fn ar_logits(g: &mut Graph, h: Var) -> Var {
    let e = g.param(g.params().layout().embed);
    g.matmul_t(h, e)
}

/// Masked-prediction head shared by both sides: dense, GELU, norm, then the
/// tied projection.
pub(crate) fn mlm_logits(g: &mut Graph, h: Var) -> Var {
    let layout = g.params().layout();
    let t = dense(g, h, layout.mlm_w, layout.mlm_b);
    let t = g.gelu(t);
    let t = norm(g, t, layout.mlm_ln);
    ar_logits(g, t)
}

/// Activations of one generation-mode pass.
#[derive(Debug, Clone)]
pub struct CausalOutput {
    /// Final decoder states, `[tgt_len, d_model]`.
    pub hidden: Tensor,
    pub logits: Tensor,
    /// Row `t` is the distribution over the token following `tgt[t]`.
    pub log_probs: Tensor,
}

/// Generation-mode forward pass for one pair. `tgt` starts with BOS.
pub fn forward_causal_full(params: &ModelParams, src: &[u32], tgt: &[u32]) -> Result<CausalOutput, ModelError> {
    let mut g = Graph::new(params);
    let (enc, segs) = encode(&mut g, &[src])?;
    let (h, _) = decode(&mut g, enc, &segs, &[tgt], true)?;
    let logits = ar_logits(&mut g, h);
    let lp = g.log_softmax(logits);
    audit(&g, lp, tgt.len(), params.hyperparams().vocab_size, "causal log-probs")?;
    Ok(CausalOutput {
        hidden: g.value(h).clone(),
        logits: g.value(logits).clone(),
        log_probs: g.value(lp).clone(),
    })
}

/// Per-position log-probabilities `[tgt_len, vocab]` of the generation mode.
pub fn forward_causal(params: &ModelParams, src: &[u32], tgt: &[u32]) -> Result<Tensor, ModelError> {
    Ok(forward_causal_full(params, src, tgt)?.log_probs)
}

/// Masked-prediction pass. Returns log-probabilities at `src_positions` of
/// the encoder and at `tgt_positions` of the bidirectional decoder.
pub fn forward_bidirectional(
    params: &ModelParams,
    masked_src: &[u32],
    src_positions: &[usize],
    masked_tgt: &[u32],
    tgt_positions: &[usize],
) -> Result<(Tensor, Tensor), ModelError> {
    let v = params.hyperparams().vocab_size;
    for (&p, len) in src_positions
        .iter()
        .map(|p| (p, masked_src.len()))
        .chain(tgt_positions.iter().map(|p| (p, masked_tgt.len())))
    {
        if p >= len {
            return Err(ModelError::Shape(format!("mask position {p} outside sequence of length {len}")));
        }
    }
    let mut g = Graph::new(params);
    let (enc, segs) = encode(&mut g, &[masked_src])?;
    let (dec, _) = decode(&mut g, enc, &segs, &[masked_tgt], false)?;
    let side = |g: &mut Graph, states: Var, pos: &[usize]| {
        if pos.is_empty() {
            return Tensor::zeros(&[0, v]);
        }
        let rows = g.gather(states, pos.to_vec());
        let logits = mlm_logits(g, rows);
        let lp = g.log_softmax(logits);
        g.value(lp).clone()
    };
    let s = side(&mut g, enc, src_positions);
    let t = side(&mut g, dec, tgt_positions);
    Ok((s, t))
}
