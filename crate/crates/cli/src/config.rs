//! Run configuration: a TOML file with dotted sections.
//!
//! Every section has defaults, unknown keys are rejected, and each value is
//! checked against the owning core type when the file is loaded.

use std::fs;
use std::path::{Path, PathBuf};

use guwen_core::corpus::io::PlainTextDefaults;
use guwen_core::corpus::{Category, DedupKey, Era};
use guwen_core::eval::AblationConfig;
use guwen_core::model::{AdamWConfig, DecodeConfig, Hyperparams, LossWeights, Schedule, TrainConfig};
use guwen_core::noising::{CorruptionProbs, MaskRange, NoiseConfig};
use guwen_core::DedupConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub paths: PathsConfig,
    pub clean: CleanConfig,
    pub dedup: DedupSection,
    pub benchmark: BenchmarkSection,
    pub model: ModelSection,
    pub noise: NoiseSection,
    pub loss: LossSection,
    pub optim: OptimSection,
    pub schedule: ScheduleSection,
    pub decode: DecodeSection,
    pub ablation: AblationSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 1,
            paths: PathsConfig::default(),
            clean: CleanConfig::default(),
            dedup: DedupSection::default(),
            benchmark: BenchmarkSection::default(),
            model: ModelSection::default(),
            noise: NoiseSection::default(),
            loss: LossSection::default(),
            optim: OptimSection::default(),
            schedule: ScheduleSection::default(),
            decode: DecodeSection::default(),
            ablation: AblationSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Raw corpus files for `clean`.
    pub input: Vec<PathBuf>,
    /// Every stage reads and writes its artifacts here.
    pub work_dir: PathBuf,
    /// Segmentation word list; the bundled list when absent.
    pub lexicon: Option<PathBuf>,
    pub trad2simp: Option<PathBuf>,
    pub punct: Option<PathBuf>,
    /// Shell command run once per input file before cleaning. It receives the
    /// file on stdin and its stdout replaces the file's text.
    pub punct_hook: Option<String>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self {
            input: Vec::new(),
            work_dir: PathBuf::from("guwen-run"),
            lexicon: None,
            trad2simp: None,
            punct: None,
            punct_hook: None,
        }
    }
}

/// Metadata for plain-text input lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleanConfig {
    pub category: Category,
    pub era: Option<Era>,
    pub origin: String,
}

impl Default for CleanConfig {
    fn default() -> Self {
        let d = PlainTextDefaults::default();
        Self { category: d.category, era: d.era, origin: d.origin }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSection {
    pub threshold: f64,
    pub num_perm: usize,
    pub shingle_size: usize,
    pub key: DedupKey,
    pub lsh_bands: Option<usize>,
}

impl Default for DedupSection {
    fn default() -> Self {
        let d = DedupConfig::default();
        Self { threshold: d.threshold, num_perm: d.num_perm, shingle_size: d.shingle_size, key: d.key, lsh_bands: d.lsh_bands }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkSection {
    /// Record `origin` values that form the benchmark sets, in report order.
    pub sets: Vec<String>,
    /// Remove benchmark records from the training pool.
    pub exclude_from_training: bool,
}

impl Default for BenchmarkSection {
    fn default() -> Self {
        Self { sets: Vec::new(), exclude_from_training: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub d_model: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let h = Hyperparams::new(0);
        Self {
            d_model: h.d_model,
            n_enc_layers: h.n_enc_layers,
            n_dec_layers: h.n_dec_layers,
            n_heads: h.n_heads,
            d_ff: h.d_ff,
            max_len: h.max_len,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub p_da: f64,
    pub enc_mask_lo: f64,
    pub enc_mask_hi: f64,
    pub dec_mask_lo: f64,
    pub dec_mask_hi: f64,
    pub mask_prob: f64,
    pub random_prob: f64,
    pub keep_prob: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        let n = NoiseConfig::default();
        Self {
            p_da: n.p_da,
            enc_mask_lo: n.enc_mask_range.lo,
            enc_mask_hi: n.enc_mask_range.hi,
            dec_mask_lo: n.dec_mask_range.lo,
            dec_mask_hi: n.dec_mask_range.hi,
            mask_prob: n.corrupt_probs.mask,
            random_prob: n.corrupt_probs.random,
            keep_prob: n.corrupt_probs.keep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSection {
    pub lambda: f64,
    pub mu: f64,
}

impl Default for LossSection {
    fn default() -> Self {
        let w = LossWeights::default();
        Self { lambda: w.lambda, mu: w.mu }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimSection {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub clip_norm: Option<f64>,
}

impl Default for OptimSection {
    fn default() -> Self {
        let o = AdamWConfig::default();
        Self { lr: o.lr, beta1: o.beta1, beta2: o.beta2, eps: o.eps, weight_decay: o.weight_decay, clip_norm: o.clip_norm }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub epochs: usize,
    pub translation_epoch: bool,
    pub batch_size: usize,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        let s = Schedule::default();
        Self { epochs: s.epochs, translation_epoch: s.translation_epoch, batch_size: s.batch_size }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeSection {
    pub beam_size: usize,
    pub max_decode_len: usize,
    pub length_penalty: f64,
}

impl Default for DecodeSection {
    fn default() -> Self {
        let d = DecodeConfig::default();
        Self { beam_size: d.beam_size, max_decode_len: d.max_decode_len, length_penalty: d.length_penalty }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationSection {
    /// Labels of the variants to run, e.g. `"w/o DAS"`.
    pub variants: Vec<String>,
    /// Multitask epochs per variant; `schedule.epochs` when absent.
    pub epochs: Option<usize>,
}

impl Default for AblationSection {
    fn default() -> Self {
        Self { variants: AblationConfig::default_matrix().into_iter().map(|c| c.label).collect(), epochs: None }
    }
}

fn invalid(key: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {e}"))
}

impl RunConfig {
    /// Parse and validate, leaving paths as written.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse and validate. Relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        Ok(Self::parse(text)?.resolved(base))
    }

    pub fn resolved(&self, base: &Path) -> Self {
        let mut cfg = self.clone();
        cfg.resolve_paths(base);
        cfg
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.paths.input.iter_mut().for_each(fix);
        fix(&mut self.paths.work_dir);
        for p in [&mut self.paths.lexicon, &mut self.paths.trad2simp, &mut self.paths.punct].into_iter().flatten() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads == 0 {
            return Err(invalid("threads", "must be positive"));
        }
        self.dedup_config().validate().map_err(|e| invalid("dedup", e))?;
        self.hyperparams(64).validate().map_err(|e| invalid("model", e))?;
        let t = self.train_config();
        t.noise.validate().map_err(|e| invalid("noise", e))?;
        t.weights.validate().map_err(|e| invalid("loss", e))?;
        t.optim.validate().map_err(|e| invalid("optim", e))?;
        if t.schedule.batch_size == 0 {
            return Err(invalid("schedule.batch_size", "must be positive"));
        }
        self.decode_config().validate().map_err(|e| invalid("decode", e))?;
        self.ablation_variants()?;
        let mut seen = std::collections::HashSet::new();
        for s in &self.benchmark.sets {
            if s.is_empty() || s.contains(['/', '\\']) || s.starts_with('.') {
                return Err(invalid("benchmark.sets", format!("{s:?} is not usable as a file name")));
            }
            if !seen.insert(s) {
                return Err(invalid("benchmark.sets", format!("{s:?} listed twice")));
            }
        }
        Ok(())
    }

    pub fn plain_text_defaults(&self) -> PlainTextDefaults {
        PlainTextDefaults { category: self.clean.category, era: self.clean.era, origin: self.clean.origin.clone() }
    }

    pub fn dedup_config(&self) -> DedupConfig {
        let d = &self.dedup;
        DedupConfig {
            threshold: d.threshold,
            num_perm: d.num_perm,
            shingle_size: d.shingle_size,
            seed: self.seed,
            key: d.key,
            lsh_bands: d.lsh_bands,
        }
    }

    pub fn hyperparams(&self, vocab_size: usize) -> Hyperparams {
        let m = &self.model;
        Hyperparams {
            vocab_size,
            d_model: m.d_model,
            n_enc_layers: m.n_enc_layers,
            n_dec_layers: m.n_dec_layers,
            n_heads: m.n_heads,
            d_ff: m.d_ff,
            max_len: m.max_len,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        let n = &self.noise;
        let o = &self.optim;
        TrainConfig {
            noise: NoiseConfig {
                p_da: n.p_da,
                enc_mask_range: MaskRange::new(n.enc_mask_lo, n.enc_mask_hi),
                dec_mask_range: MaskRange::new(n.dec_mask_lo, n.dec_mask_hi),
                corrupt_probs: CorruptionProbs { mask: n.mask_prob, random: n.random_prob, keep: n.keep_prob },
                seed: self.seed,
            },
            weights: LossWeights { lambda: self.loss.lambda, mu: self.loss.mu },
            optim: AdamWConfig {
                lr: o.lr,
                beta1: o.beta1,
                beta2: o.beta2,
                eps: o.eps,
                weight_decay: o.weight_decay,
                clip_norm: o.clip_norm,
            },
            schedule: Schedule {
                epochs: self.schedule.epochs,
                translation_epoch: self.schedule.translation_epoch,
                batch_size: self.schedule.batch_size,
            },
            seed: self.seed,
        }
    }

    pub fn decode_config(&self) -> DecodeConfig {
        let d = &self.decode;
        DecodeConfig { beam_size: d.beam_size, max_decode_len: d.max_decode_len, length_penalty: d.length_penalty }
    }

    pub fn ablation_variants(&self) -> Result<Vec<AblationConfig>, CliError> {
        let mut all = Vec::new();
        for bits in 0..16u8 {
            all.push(AblationConfig::new(bits & 1 != 0, bits & 2 != 0, bits & 4 != 0, bits & 8 != 0));
        }
        self.ablation
            .variants
            .iter()
            .map(|label| {
                all.iter()
                    .find(|c| &c.label == label)
                    .cloned()
                    .ok_or_else(|| invalid("ablation.variants", format!("unknown variant {label:?}")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = RunConfig::from_toml("", Path::new("/base")).unwrap();
        assert_eq!(cfg.paths.work_dir, PathBuf::from("/base/guwen-run"));
        assert_eq!(cfg.train_config().weights, LossWeights::default());
        assert_eq!(cfg.ablation_variants().unwrap(), AblationConfig::default_matrix());
    }

    #[test]
    fn dotted_keys_and_comments() {
        let text = "# toy run\nseed = 4\nnoise.p_da = 0.5 # half\n[optim]\nlr = 1e-3\n";
        let cfg = RunConfig::from_toml(text, Path::new(".")).unwrap();
        assert_eq!(cfg.seed, 4);
        assert_eq!(cfg.noise.p_da, 0.5);
        assert_eq!(cfg.train_config().optim.lr, 1e-3);
        assert_eq!(cfg.train_config().noise.seed, 4);
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        for text in [
            "sead = 1",
            "[noise]\np_daa = 0.5",
            "noise.p_da = 1.5",
            "loss.mu = -0.1",
            "model.n_heads = 3",
            "dedup.threshold = 2.0",
            "schedule.batch_size = 0",
            "decode.beam_size = 0",
            "ablation.variants = [\"w/o everything\"]",
            "threads = 0",
            "benchmark.sets = [\"a/b\"]",
            "benchmark.sets = [\"a\", \"a\"]",
        ] {
            assert!(matches!(RunConfig::from_toml(text, Path::new(".")), Err(CliError::Config(_))), "{text}");
        }
    }
}
