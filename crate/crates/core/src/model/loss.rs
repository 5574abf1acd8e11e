use serde::{Deserialize, Serialize};

use super::graph::{Gradients, Graph, Pick, Var};
use super::transformer::{ar_logits, decode, encode, mlm_logits};
use super::{ModelError, ModelParams};
use crate::noising::{DasExample, DmlmExample};

/// `lambda` weighs the encoder side of the masked objective, `mu` weighs
/// the masked objective against the substitution objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda: f64,
    pub mu: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { lambda: 0.3, mu: 0.3 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in [("lambda", self.lambda), ("mu", self.mu)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::InvalidConfig(format!("{name} = {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Mean over examples of the per-token NLL of `y_1 .. y_n, EOS`. Examples
/// whose target is only `[BOS, EOS]` do not count.
pub(crate) fn das_term(g: &mut Graph, batch: &[DasExample]) -> Result<Option<Var>, ModelError> {
    let kept: Vec<&DasExample> = batch.iter().filter(|e| e.tgt.len() > 2).collect();
    if kept.is_empty() {
        return Ok(None);
    }
    let src: Vec<&[u32]> = kept.iter().map(|e| e.noised_src.as_slice()).collect();
    let inputs: Vec<&[u32]> = kept.iter().map(|e| &e.tgt[..e.tgt.len() - 1]).collect();
    let (enc, segs) = encode(g, &src)?;
    let (h, dsegs) = decode(g, enc, &segs, &inputs, true)?;
    let logits = ar_logits(g, h);
    let lp = g.log_softmax(logits);
    let per_example = 1.0 / kept.len() as f64;
    let mut picks = Vec::new();
    for (e, seg) in kept.iter().zip(&dsegs) {
        let targets = &e.tgt[1..];
        let w = per_example / targets.len() as f64;
        for (t, &tok) in targets.iter().enumerate() {
            picks.push(Pick { row: seg.start + t, col: tok as usize, weight: w });
        }
    }
    Ok(Some(g.nll(lp, picks)))
}

/// Pooled mean NLL over the masked positions of each side, `(enc, dec)`.
/// A side with no masked position in the whole batch yields `None`.
pub(crate) fn dmlm_terms(g: &mut Graph, batch: &[DmlmExample]) -> Result<(Option<Var>, Option<Var>), ModelError> {
    let src: Vec<&[u32]> = batch.iter().map(|e| e.src.tokens.as_slice()).collect();
    let tgt: Vec<&[u32]> = batch.iter().map(|e| e.tgt.tokens.as_slice()).collect();
    let (enc, segs) = encode(g, &src)?;
    let enc_term = masked_nll(g, enc, &segs, batch.iter().map(|e| (&e.src.positions, &e.src.originals)));
    let has_tgt = batch.iter().any(|e| !e.tgt.positions.is_empty());
    let dec_term = if has_tgt {
        let (dec, dsegs) = decode(g, enc, &segs, &tgt, false)?;
        masked_nll(g, dec, &dsegs, batch.iter().map(|e| (&e.tgt.positions, &e.tgt.originals)))
    } else {
        None
    };
    Ok((enc_term, dec_term))
}

fn masked_nll<'a>(
    g: &mut Graph,
    states: Var,
    segs: &[super::transformer::Segment],
    sides: impl Iterator<Item = (&'a Vec<usize>, &'a Vec<u32>)>,
) -> Option<Var> {
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for (seg, (positions, originals)) in segs.iter().zip(sides) {
        rows.extend(positions.iter().map(|&p| seg.start + p));
        targets.extend(originals.iter().copied());
    }
    if rows.is_empty() {
        return None;
    }
    let w = 1.0 / rows.len() as f64;
    let h = g.gather(states, rows);
    let logits = mlm_logits(g, h);
    let lp = g.log_softmax(logits);
    let picks = targets
        .iter()
        .enumerate()
        .map(|(r, &t)| Pick { row: r, col: t as usize, weight: w })
        .collect();
    Some(g.nll(lp, picks))
}

/// Substitution objective of a batch.
pub fn loss_das(params: &ModelParams, batch: &[DasExample]) -> Result<f64, ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut g = Graph::new(params);
    match das_term(&mut g, batch)? {
        Some(v) => Ok(g.value(v).item()),
        None => Err(ModelError::EmptyBatch),
    }
}

/// Encoder and decoder masked losses, unweighted.
pub fn dmlm_components(params: &ModelParams, batch: &[DmlmExample]) -> Result<(f64, f64), ModelError> {
    if batch.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut g = Graph::new(params);
    match dmlm_terms(&mut g, batch)? {
        (Some(e), Some(d)) => Ok((g.value(e).item(), g.value(d).item())),
        (None, _) => Err(ModelError::NoMaskedPositions { side: "source" }),
        (_, None) => Err(ModelError::NoMaskedPositions { side: "target" }),
    }
}

/// `lambda * L_enc + (1 - lambda) * L_dec`.
pub fn loss_dmlm(params: &ModelParams, batch: &[DmlmExample], w: LossWeights) -> Result<f64, ModelError> {
    let (e, d) = dmlm_components(params, batch)?;
    Ok(w.lambda * e + (1.0 - w.lambda) * d)
}

/// `(1 - mu) * das + mu * dmlm`.
pub fn loss_total(das: f64, dmlm: f64, w: LossWeights) -> Result<f64, ModelError> {
    if !das.is_finite() || !dmlm.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    Ok((1.0 - w.mu) * das + w.mu * dmlm)
}

/// A differentiable training objective.
#[derive(Debug, Clone, Copy)]
pub enum Objective<'a> {
    Das(&'a [DasExample]),
    MaskedEncoder(&'a [DmlmExample]),
    MaskedDecoder(&'a [DmlmExample]),
    Total {
        das: &'a [DasExample],
        dmlm: &'a [DmlmExample],
        weights: LossWeights,
    },
}

/// Component values of one evaluated objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParts {
    pub das: Option<f64>,
    pub dmlm: Option<f64>,
    pub total: f64,
}

fn build(g: &mut Graph, objective: Objective) -> Result<(Var, LossParts), ModelError> {
    let missing = |side| ModelError::NoMaskedPositions { side };
    match objective {
        Objective::Das(b) => {
            let v = das_term(g, b)?.ok_or(ModelError::EmptyBatch)?;
            let x = g.value(v).item();
            Ok((v, LossParts { das: Some(x), dmlm: None, total: x }))
        }
        Objective::MaskedEncoder(b) => {
            let v = dmlm_terms(g, b)?.0.ok_or(missing("source"))?;
            let x = g.value(v).item();
            Ok((v, LossParts { das: None, dmlm: Some(x), total: x }))
        }
        Objective::MaskedDecoder(b) => {
            let v = dmlm_terms(g, b)?.1.ok_or(missing("target"))?;
            let x = g.value(v).item();
            Ok((v, LossParts { das: None, dmlm: Some(x), total: x }))
        }
        Objective::Total { das, dmlm, weights } => {
            let d = das_term(g, das)?;
            let m = if weights.mu > 0.0 && !dmlm.is_empty() {
                // A side without masked positions is dropped from this batch
                // and the other side carries the full weight.
                match dmlm_terms(g, dmlm)? {
                    (Some(e), Some(t)) => Some(g.weighted_sum(vec![(e, weights.lambda), (t, 1.0 - weights.lambda)])),
                    (Some(e), None) => Some(e),
                    (None, Some(t)) => Some(t),
                    (None, None) => None,
                }
            } else {
                None
            };
            let das_val = d.map(|v| g.value(v).item());
            let dmlm_val = m.map(|v| g.value(v).item());
            let total = match (d, m) {
                (Some(d), Some(m)) => g.weighted_sum(vec![(d, 1.0 - weights.mu), (m, weights.mu)]),
                (Some(d), None) => d,
                (None, Some(m)) => m,
                (None, None) => return Err(ModelError::EmptyBatch),
            };
            let t = g.value(total).item();
            Ok((total, LossParts { das: das_val, dmlm: dmlm_val, total: t }))
        }
    }
}

/// Value of an objective without differentiating it.
pub fn objective_value(params: &ModelParams, objective: Objective) -> Result<LossParts, ModelError> {
    let mut g = Graph::new(params);
    Ok(build(&mut g, objective)?.1)
}

/// Value and parameter gradients of an objective.
pub fn loss_and_grads(params: &ModelParams, objective: Objective) -> Result<(LossParts, Gradients), ModelError> {
    let mut g = Graph::new(params);
    let (v, parts) = build(&mut g, objective)?;
    if !parts.total.is_finite() {
        return Err(ModelError::NonFiniteLoss);
    }
    let grads = g.backward(v)?;
    Ok((parts, grads))
}
