use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{NoiseConfig, NoiseError, Tokenizer};
use crate::align::AlignmentSet;

/// One replaced source character.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Substitution {
    pub src_index: usize,
    pub original: u32,
}

/// Source with aligned characters replaced by their modern words, paired
/// with the full target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DasExample {
    pub noised_src: Vec<u32>,
    /// `[BOS] y [EOS]`.
    pub tgt: Vec<u32>,
    /// Ordered by source position.
    pub substituted: Vec<Substitution>,
}

impl DasExample {
    /// Plain translation example with nothing substituted.
    pub fn plain(src: Vec<u32>, tgt: Vec<u32>) -> Self {
        Self {
            noised_src: src,
            tgt,
            substituted: Vec::new(),
        }
    }

    /// Undo every substitution (each one spans two tokens of `noised_src`).
    pub fn restore_source(&self) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.noised_src.len());
        let mut subs = self.substituted.iter().peekable();
        let mut pos = 0;
        while pos < self.noised_src.len() {
            match subs.peek() {
                Some(s) if s.src_index == out.len() => {
                    out.push(s.original);
                    subs.next();
                    pos += 2;
                }
                _ => {
                    out.push(self.noised_src[pos]);
                    pos += 1;
                }
            }
        }
        out
    }
}

/// Substitute each aligned character independently with probability
/// `cfg.p_da`.
pub fn make_das<R: Rng + ?Sized>(
    x: &str,
    y: &str,
    alignment: &AlignmentSet,
    tok: &Tokenizer,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> Result<DasExample, NoiseError> {
    alignment
        .check(x, y)
        .map_err(NoiseError::InvalidAlignment)?;
    let xc: Vec<char> = x.chars().collect();
    let yc: Vec<char> = y.chars().collect();

    let mut noised_src = Vec::with_capacity(xc.len() + alignment.len());
    let mut substituted = Vec::new();
    let mut pairs = alignment.pairs().iter().peekable();
    for (i, &c) in xc.iter().enumerate() {
        let pair = pairs.next_if(|p| p.src_index == i);
        match pair {
            Some(p) if rng.gen::<f64>() < cfg.p_da => {
                noised_src.push(tok.id(yc[p.tgt_span.start]));
                noised_src.push(tok.id(yc[p.tgt_span.start + 1]));
                substituted.push(Substitution {
                    src_index: i,
                    original: tok.id(c),
                });
            }
            _ => noised_src.push(tok.id(c)),
        }
    }
    Ok(DasExample {
        noised_src,
        tgt: tok.encode_target(y),
        substituted,
    })
}
