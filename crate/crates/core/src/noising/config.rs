use serde::{Deserialize, Serialize};

use super::NoiseError;

/// Encoder mask ratio used when dynamic masking is disabled.
pub const FIXED_ENC_MASK_RATIO: f64 = 0.15;
/// Decoder mask ratio used when dynamic masking is disabled.
pub const FIXED_DEC_MASK_RATIO: f64 = 0.35;

/// Closed interval a per-example mask ratio is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskRange {
    pub lo: f64,
    pub hi: f64,
}

impl MaskRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn fixed(r: f64) -> Self {
        Self { lo: r, hi: r }
    }

    pub fn is_fixed(&self) -> bool {
        self.lo == self.hi
    }

    fn validate(&self, what: &str) -> Result<(), NoiseError> {
        if !(0.0 <= self.lo && self.lo <= self.hi && self.hi <= 1.0) {
            return Err(NoiseError::InvalidConfig(format!(
                "{what} [{}, {}] must satisfy 0 <= lo <= hi <= 1",
                self.lo, self.hi
            )));
        }
        Ok(())
    }
}

/// How a selected position is corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionProbs {
    pub mask: f64,
    pub random: f64,
    pub keep: f64,
}

impl Default for CorruptionProbs {
    fn default() -> Self {
        Self {
            mask: 0.8,
            random: 0.1,
            keep: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Probability of substituting each aligned character.
    pub p_da: f64,
    pub enc_mask_range: MaskRange,
    pub dec_mask_range: MaskRange,
    pub corrupt_probs: CorruptionProbs,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            p_da: 0.7,
            enc_mask_range: MaskRange::new(0.1, 0.2),
            dec_mask_range: MaskRange::new(0.2, 0.5),
            corrupt_probs: CorruptionProbs::default(),
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(0.0..=1.0).contains(&self.p_da) {
            return Err(NoiseError::InvalidConfig(format!("p_da {} outside [0, 1]", self.p_da)));
        }
        self.enc_mask_range.validate("enc_mask_range")?;
        self.dec_mask_range.validate("dec_mask_range")?;
        let c = self.corrupt_probs;
        if [c.mask, c.random, c.keep].iter().any(|p| !(0.0..=1.0).contains(p))
            || (c.mask + c.random + c.keep - 1.0).abs() > 1e-9
        {
            return Err(NoiseError::InvalidConfig(
                "corruption probabilities must be in [0, 1] and sum to 1".into(),
            ));
        }
        Ok(())
    }

    /// Same configuration with the mask ratios pinned to 0.15 / 0.35.
    pub fn with_fixed_mask(&self) -> Self {
        Self {
            enc_mask_range: MaskRange::fixed(FIXED_ENC_MASK_RATIO),
            dec_mask_range: MaskRange::fixed(FIXED_DEC_MASK_RATIO),
            ..self.clone()
        }
    }
}
