use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{MaskRange, NoiseConfig, NoiseError, Tokenizer, MASK, NUM_SPECIALS};

/// Which corruption a selected position received.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corruption {
    Mask,
    Random,
    Keep,
}

/// One side of a dual-masked example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskedSide {
    pub tokens: Vec<u32>,
    /// Sorted, duplicate-free indices into `tokens`.
    pub positions: Vec<usize>,
    pub originals: Vec<u32>,
    pub corruption: Vec<Corruption>,
    /// Mask ratio drawn for this example.
    pub ratio: f64,
}

impl MaskedSide {
    /// Write the original tokens back.
    pub fn restore(&self) -> Vec<u32> {
        let mut out = self.tokens.clone();
        for (&p, &o) in self.positions.iter().zip(&self.originals) {
            out[p] = o;
        }
        out
    }
}

/// Source and target masked independently; the unmasked remainder of each
/// side is the model's context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmlmExample {
    pub src: MaskedSide,
    pub tgt: MaskedSide,
}

fn mask_side<R: Rng + ?Sized>(
    tokens: &[u32],
    range: MaskRange,
    vocab_size: usize,
    cfg: &NoiseConfig,
    side: &'static str,
    rng: &mut R,
) -> Result<MaskedSide, NoiseError> {
    let maskable: Vec<usize> = (0..tokens.len())
        .filter(|&i| !Tokenizer::is_special(tokens[i]))
        .collect();
    let n = maskable.len();
    if n == 0 {
        return Err(NoiseError::SequenceTooShort { side });
    }
    let ratio = range.lo + (range.hi - range.lo) * rng.gen::<f64>();
    // Stochastic rounding keeps E[count] = ratio * n exactly; a positive
    // ratio always masks at least one position.
    let expected = ratio * n as f64;
    let mut count = expected.floor() as usize;
    if rng.gen::<f64>() < expected - expected.floor() {
        count += 1;
    }
    if ratio > 0.0 {
        count = count.max(1);
    }
    let count = count.min(n);

    let mut positions: Vec<usize> = index::sample(rng, n, count)
        .into_iter()
        .map(|k| maskable[k])
        .collect();
    positions.sort_unstable();

    let mut out = tokens.to_vec();
    let mut originals = Vec::with_capacity(count);
    let mut corruption = Vec::with_capacity(count);
    let p = cfg.corrupt_probs;
    let has_normal = vocab_size > NUM_SPECIALS as usize;
    for &pos in &positions {
        originals.push(tokens[pos]);
        let u = rng.gen::<f64>();
        let kind = if u < p.mask {
            out[pos] = MASK;
            Corruption::Mask
        } else if u < p.mask + p.random && has_normal {
            out[pos] = rng.gen_range(NUM_SPECIALS..vocab_size as u32);
            Corruption::Random
        } else {
            Corruption::Keep
        };
        corruption.push(kind);
    }
    Ok(MaskedSide {
        tokens: out,
        positions,
        originals,
        corruption,
        ratio,
    })
}

/// Mask `x` (source tokens) and `y` (`[BOS] target [EOS]`) independently.
pub fn make_dmlm<R: Rng + ?Sized>(
    x: &[u32],
    y: &[u32],
    vocab_size: usize,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> Result<DmlmExample, NoiseError> {
    let src = mask_side(x, cfg.enc_mask_range, vocab_size, cfg, "source", rng)?;
    let tgt = mask_side(y, cfg.dec_mask_range, vocab_size, cfg, "target", rng)?;
    Ok(DmlmExample { src, tgt })
}
