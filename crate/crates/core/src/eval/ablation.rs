use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evaluate::{evaluate_sets, EvalReport};
use super::EvalError;
use crate::corpus::CorpusRecord;
use crate::model::{train, DecodeConfig, Hyperparams, ModelParams, NoiseStats, Phase, TrainConfig, TrainingPair};
use crate::noising::Tokenizer;

/// Which training components are switched on. The label is derived from the
/// flags, so two configurations share a label exactly when they are equal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "AblationFlags")]
pub struct AblationConfig {
    pub use_das: bool,
    pub use_dmlm: bool,
    pub dynamic_mask: bool,
    pub translation_epoch: bool,
    pub label: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AblationFlags {
    use_das: bool,
    use_dmlm: bool,
    dynamic_mask: bool,
    translation_epoch: bool,
    #[serde(default)]
    label: Option<String>,
}

impl TryFrom<AblationFlags> for AblationConfig {
    type Error = String;

    fn try_from(f: AblationFlags) -> Result<Self, String> {
        let cfg = Self::new(f.use_das, f.use_dmlm, f.dynamic_mask, f.translation_epoch);
        match f.label {
            Some(l) if l != cfg.label => Err(format!("label {l:?} does not match flags ({:?})", cfg.label)),
            _ => Ok(cfg),
        }
    }
}

impl AblationConfig {
    pub fn new(use_das: bool, use_dmlm: bool, dynamic_mask: bool, translation_epoch: bool) -> Self {
        let removed: Vec<&str> = [
            (use_das, "DAS"),
            (use_dmlm, "DMLM"),
            (dynamic_mask, "dynamic mask"),
            (translation_epoch, "translation training"),
        ]
        .iter()
        .filter(|(on, _)| !on)
        .map(|(_, n)| *n)
        .collect();
        let label = if removed.is_empty() { "full".to_string() } else { format!("w/o {}", removed.join(" + ")) };
        Self { use_das, use_dmlm, dynamic_mask, translation_epoch, label }
    }

    pub fn full() -> Self {
        Self::new(true, true, true, true)
    }

    /// The full model and the four single-component removals.
    pub fn default_matrix() -> Vec<Self> {
        vec![
            Self::full(),
            Self::new(false, true, true, true),
            Self::new(true, false, true, true),
            Self::new(true, true, false, true),
            Self::new(true, true, true, false),
        ]
    }

    /// Training configuration with the disabled components removed. Without
    /// DAS no character is substituted, so the generation objective sees the
    /// plain source.
    pub fn apply(&self, base: &TrainConfig) -> TrainConfig {
        let mut cfg = base.clone();
        if !self.use_das {
            cfg.noise.p_da = 0.0;
        }
        if !self.use_dmlm {
            cfg.weights.mu = 0.0;
        }
        if !self.dynamic_mask {
            cfg.noise = cfg.noise.with_fixed_mask();
        }
        cfg.schedule.translation_epoch = self.translation_epoch;
        cfg
    }
}

/// Everything a row of the matrix shares with the others.
#[derive(Debug, Clone)]
pub struct AblationSetup<'a> {
    pub pairs: &'a [TrainingPair],
    pub tokenizer: &'a Tokenizer,
    pub hyperparams: Hyperparams,
    pub train: TrainConfig,
    pub decode: DecodeConfig,
    pub eval_sets: &'a [(String, Vec<CorpusRecord>)],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub config: AblationConfig,
    pub report: EvalReport,
    pub noise_stats: NoiseStats,
    pub translation_steps: usize,
    pub params_checksum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub rows: Vec<AblationRow>,
}

/// Train and evaluate one model per configuration from the same data,
/// initialisation and seed. Rows run in parallel; each run is itself
/// sequential, so the report does not depend on the thread count.
pub fn run_ablation_matrix(
    setup: &AblationSetup,
    configs: &[AblationConfig],
    seed: u64,
) -> Result<AblationReport, EvalError> {
    if configs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let rows = configs
        .par_iter()
        .map(|c| {
            let mut cfg = c.apply(&setup.train);
            cfg.seed = seed;
            let init = ModelParams::init(setup.hyperparams, seed)?;
            let out = train(init, setup.pairs, setup.tokenizer, &cfg)?;
            let report = evaluate_sets(&out.params, setup.tokenizer, setup.eval_sets, &setup.decode)?;
            Ok(AblationRow {
                config: c.clone(),
                report,
                noise_stats: out.noise_stats,
                translation_steps: out.log.iter().filter(|r| r.phase == Phase::Translation).count(),
                params_checksum: out.params.checksum(),
            })
        })
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(AblationReport { seed, rows })
}

impl AblationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Models as rows, evaluation sets as columns, BLEU in the cells.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let names: Vec<&str> = self
            .rows
            .first()
            .map(|r| r.report.sets.iter().map(|s| s.name.as_str()).collect())
            .unwrap_or_default();
        let _ = write!(out, "{:<34}", "Model");
        for n in &names {
            let _ = write!(out, " {:>12}", n);
        }
        let _ = writeln!(out, " {:>8}", "Avg");
        for row in &self.rows {
            let _ = write!(out, "{:<34}", row.config.label);
            for s in &row.report.sets {
                let _ = write!(out, " {:>12.2}", s.bleu.corpus_bleu);
            }
            let _ = writeln!(out, " {:>8.2}", row.report.average_bleu);
        }
        out
    }
}
