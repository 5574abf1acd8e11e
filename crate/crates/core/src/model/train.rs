use std::fmt::Write as _;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_grads, LossWeights, Objective};
use super::optim::{AdamW, AdamWConfig};
use super::{ModelError, ModelParams};
use crate::align::{align_pair, segment_target, AlignError, AlignmentSet, Lexicon};
use crate::corpus::CorpusRecord;
use crate::noising::{make_das, make_dmlm, DasExample, DmlmExample, NoiseConfig, Tokenizer};
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Epochs of the combined objective.
    pub epochs: usize,
    /// Append one epoch of plain source-to-target training.
    pub translation_epoch: bool,
    pub batch_size: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Self { epochs: 10, translation_epoch: true, batch_size: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainConfig {
    pub noise: NoiseConfig,
    pub weights: LossWeights,
    pub optim: AdamWConfig,
    pub schedule: Schedule,
    pub seed: u64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        self.noise.validate()?;
        self.weights.validate()?;
        self.optim.validate()?;
        if self.schedule.batch_size == 0 {
            return Err(ModelError::InvalidConfig("batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Multitask,
    Translation,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Multitask => "multitask",
            Phase::Translation => "translation",
        }
    }
}

/// One optimizer step. `l_dmlm` is absent when the step had no masked term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub step: usize,
    pub epoch: usize,
    pub l_das: Option<f64>,
    pub l_dmlm: Option<f64>,
    pub l_total: f64,
    pub phase: Phase,
}

/// Loss log as CSV with columns `step,l_das,l_dmlm,l_total,phase`.
pub fn loss_log_csv(log: &[LossRecord]) -> String {
    let mut out = String::from("step,l_das,l_dmlm,l_total,phase\n");
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    for r in log {
        let _ = writeln!(out, "{},{},{},{:.17e},{}", r.step, opt(r.l_das), opt(r.l_dmlm), r.l_total, r.phase.as_str());
    }
    out
}

/// Observed noising behaviour over the whole run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseStats {
    pub examples: usize,
    pub aligned_pairs: usize,
    pub substitutions: usize,
    pub enc_ratio_min: Option<f64>,
    pub enc_ratio_max: Option<f64>,
    pub dec_ratio_min: Option<f64>,
    pub dec_ratio_max: Option<f64>,
    pub enc_masked: usize,
    pub enc_tokens: usize,
    pub dec_masked: usize,
    pub dec_tokens: usize,
}

impl NoiseStats {
    fn observe(&mut self, das: &DasExample, aligned: usize, dmlm: Option<&DmlmExample>) {
        self.examples += 1;
        self.aligned_pairs += aligned;
        self.substitutions += das.substituted.len();
        if let Some(m) = dmlm {
            let upd = |lo: &mut Option<f64>, hi: &mut Option<f64>, r: f64| {
                *lo = Some(lo.map_or(r, |v| v.min(r)));
                *hi = Some(hi.map_or(r, |v| v.max(r)));
            };
            upd(&mut self.enc_ratio_min, &mut self.enc_ratio_max, m.src.ratio);
            upd(&mut self.dec_ratio_min, &mut self.dec_ratio_max, m.tgt.ratio);
            self.enc_masked += m.src.positions.len();
            self.enc_tokens += m.src.tokens.len();
            self.dec_masked += m.tgt.positions.len();
            // BOS and EOS are never candidates.
            self.dec_tokens += m.tgt.tokens.len().saturating_sub(2);
        }
    }

    pub fn substitution_rate(&self) -> Option<f64> {
        (self.aligned_pairs > 0).then(|| self.substitutions as f64 / self.aligned_pairs as f64)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<LossRecord>,
    pub noise_stats: NoiseStats,
    /// Ids of records left out because they could not fit `max_len`.
    pub skipped_too_long: Vec<String>,
}

/// A parallel record with its alignment, ready for noising.
#[derive(Debug, Clone)]
pub struct TrainingPair {
    pub id: String,
    pub src: String,
    pub tgt: String,
    pub alignment: AlignmentSet,
}

/// Segment and align every record of a parallel corpus.
pub fn prepare_pairs(corpus: &[CorpusRecord], lex: &Lexicon) -> Result<Vec<TrainingPair>, AlignError> {
    corpus
        .iter()
        .map(|r| {
            let tgt = r.target.as_deref().ok_or_else(|| AlignError::NotParallel(r.id.clone()))?;
            let alignment = align_pair(&r.source, tgt, &segment_target(tgt, lex))?;
            Ok(TrainingPair { id: r.id.clone(), src: r.source.clone(), tgt: tgt.to_string(), alignment })
        })
        .collect()
}

fn fits(p: &TrainingPair, max_len: usize) -> bool {
    let src = p.src.chars().count() + p.alignment.len();
    let tgt = p.tgt.chars().count() + 2;
    src <= max_len && tgt <= max_len && !p.src.is_empty()
}

/// The substitution and masked views of one record in a multitask epoch.
/// The masked view is absent when the masked objective is switched off.
/// Noise comes from a stream keyed by seed, epoch and record id.
pub fn noised_views(
    p: &TrainingPair,
    tok: &Tokenizer,
    cfg: &TrainConfig,
    epoch: usize,
) -> Result<(DasExample, Option<DmlmExample>), ModelError> {
    let mut rng = substream(
        cfg.seed,
        &[b"example", &cfg.noise.seed.to_le_bytes(), &(epoch as u64).to_le_bytes(), p.id.as_bytes()],
    );
    let d = make_das(&p.src, &p.tgt, &p.alignment, tok, &cfg.noise, &mut rng)?;
    let m = if cfg.weights.mu > 0.0 {
        Some(make_dmlm(&tok.encode(&p.src), &d.tgt, tok.size(), &cfg.noise, &mut rng)?)
    } else {
        None
    };
    Ok((d, m))
}

/// Multitask training followed by the optional translation epoch.
///
/// Every step evaluates the combined objective on one batch that carries
/// both the substitution view and the masked view of the same records.
pub fn train(
    mut params: ModelParams,
    pairs: &[TrainingPair],
    tok: &Tokenizer,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, ModelError> {
    cfg.validate()?;
    if tok.size() != params.hyperparams().vocab_size {
        return Err(ModelError::InvalidConfig(format!(
            "tokenizer has {} entries but the model vocabulary is {}",
            tok.size(),
            params.hyperparams().vocab_size
        )));
    }
    let max_len = params.hyperparams().max_len;
    let (usable, skipped): (Vec<&TrainingPair>, Vec<&TrainingPair>) = pairs.iter().partition(|p| fits(p, max_len));
    if usable.is_empty() {
        return Err(ModelError::EmptyBatch);
    }
    let mut opt = AdamW::new(cfg.optim, &params)?;
    let mut log = Vec::new();
    let mut stats = NoiseStats::default();
    let bs = cfg.schedule.batch_size;

    let epochs = cfg.schedule.epochs + usize::from(cfg.schedule.translation_epoch);
    for epoch in 0..epochs {
        let phase = if epoch < cfg.schedule.epochs { Phase::Multitask } else { Phase::Translation };
        let mut order: Vec<usize> = (0..usable.len()).collect();
        order.shuffle(&mut substream(cfg.seed, &[b"shuffle", &(epoch as u64).to_le_bytes()]));
        for chunk in order.chunks(bs) {
            let mut das = Vec::with_capacity(chunk.len());
            let mut dmlm = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let p = usable[i];
                if phase == Phase::Translation {
                    das.push(DasExample::plain(tok.encode(&p.src), tok.encode_target(&p.tgt)));
                    continue;
                }
                let (d, m) = noised_views(p, tok, cfg, epoch)?;
                stats.observe(&d, p.alignment.len(), m.as_ref());
                das.push(d);
                dmlm.extend(m);
            }
            let objective = Objective::Total { das: &das, dmlm: &dmlm, weights: cfg.weights };
            let (parts, grads) = loss_and_grads(&params, objective)?;
            opt.step(&mut params, &grads);
            log.push(LossRecord {
                step: log.len(),
                epoch,
                l_das: parts.das,
                l_dmlm: parts.dmlm,
                l_total: parts.total,
                phase,
            });
        }
    }
    Ok(TrainOutcome {
        params,
        log,
        noise_stats: stats,
        skipped_too_long: skipped.iter().map(|p| p.id.clone()).collect(),
    })
}

/// Mean total loss of the last epoch in `phase`.
pub fn final_epoch_loss(log: &[LossRecord], phase: Phase) -> Option<f64> {
    let last = log.iter().filter(|r| r.phase == phase).map(|r| r.epoch).max()?;
    let vals: Vec<f64> = log.iter().filter(|r| r.phase == phase && r.epoch == last).map(|r| r.l_total).collect();
    Some(vals.iter().sum::<f64>() / vals.len() as f64)
}
