use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ModelError, Tensor};
use crate::rng::substream;

/// Architecture sizes. All sequences, source or `[BOS] target [EOS]`, must
/// fit in `max_len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyperparams {
    pub vocab_size: usize,
    pub d_model: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
}

impl Hyperparams {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            vocab_size,
            d_model: 64,
            n_enc_layers: 2,
            n_dec_layers: 2,
            n_heads: 4,
            d_ff: 256,
            max_len: 128,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        if self.vocab_size <= crate::noising::NUM_SPECIALS as usize {
            return bad(format!("vocab_size {} leaves no room for ordinary tokens", self.vocab_size));
        }
        if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return bad(format!("d_model {} must be a positive multiple of n_heads {}", self.d_model, self.n_heads));
        }
        if self.d_ff == 0 || self.max_len == 0 {
            return bad("d_ff and max_len must be positive".into());
        }
        Ok(())
    }
}

/// Index of a parameter block inside [`ModelParams`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NormIds {
    pub gamma: ParamId,
    pub beta: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct AttnIds {
    pub wq: ParamId,
    pub bq: ParamId,
    pub wk: ParamId,
    pub bk: ParamId,
    pub wv: ParamId,
    pub bv: ParamId,
    pub wo: ParamId,
    pub bo: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct FfnIds {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

#[derive(Debug, Clone, Copy)]
pub struct EncLayerIds {
    pub ln_attn: NormIds,
    pub attn: AttnIds,
    pub ln_ffn: NormIds,
    pub ffn: FfnIds,
}

#[derive(Debug, Clone, Copy)]
pub struct DecLayerIds {
    pub ln_self: NormIds,
    pub self_attn: AttnIds,
    pub ln_cross: NormIds,
    pub cross_attn: AttnIds,
    pub ln_ffn: NormIds,
    pub ffn: FfnIds,
}

/// Where each block lives.
#[derive(Debug, Clone)]
pub struct Layout {
    pub embed: ParamId,
    pub enc_pos: ParamId,
    pub dec_pos: ParamId,
    pub enc_layers: Vec<EncLayerIds>,
    pub enc_ln: NormIds,
    pub dec_layers: Vec<DecLayerIds>,
    pub dec_ln: NormIds,
    pub mlm_w: ParamId,
    pub mlm_b: ParamId,
    pub mlm_ln: NormIds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock {
    pub name: String,
    pub tensor: Tensor,
}

/// All trainable weights with a fixed, named block order.
#[derive(Debug, Clone)]
pub struct ModelParams {
    hp: Hyperparams,
    blocks: Vec<ParamBlock>,
    layout: Layout,
}

impl PartialEq for ModelParams {
    fn eq(&self, other: &Self) -> bool {
        self.hp == other.hp && self.blocks == other.blocks
    }
}

enum Init {
    Uniform,
    Zeros,
    Ones,
}

struct Builder {
    blocks: Vec<(String, Vec<usize>, Init)>,
}

impl Builder {
    fn add(&mut self, name: String, shape: Vec<usize>, init: Init) -> ParamId {
        self.blocks.push((name, shape, init));
        ParamId(self.blocks.len() - 1)
    }

    fn norm(&mut self, prefix: &str, d: usize) -> NormIds {
        NormIds {
            gamma: self.add(format!("{prefix}.gamma"), vec![d], Init::Ones),
            beta: self.add(format!("{prefix}.beta"), vec![d], Init::Zeros),
        }
    }

    fn attn(&mut self, prefix: &str, d: usize) -> AttnIds {
        let mut pair = |n: &str| {
            (
                self.add(format!("{prefix}.w{n}"), vec![d, d], Init::Uniform),
                self.add(format!("{prefix}.b{n}"), vec![d], Init::Zeros),
            )
        };
        let (wq, bq) = pair("q");
        let (wk, bk) = pair("k");
        let (wv, bv) = pair("v");
        let (wo, bo) = pair("o");
        AttnIds { wq, bq, wk, bk, wv, bv, wo, bo }
    }

    fn ffn(&mut self, prefix: &str, d: usize, f: usize) -> FfnIds {
        FfnIds {
            w1: self.add(format!("{prefix}.w1"), vec![d, f], Init::Uniform),
            b1: self.add(format!("{prefix}.b1"), vec![f], Init::Zeros),
            w2: self.add(format!("{prefix}.w2"), vec![f, d], Init::Uniform),
            b2: self.add(format!("{prefix}.b2"), vec![d], Init::Zeros),
        }
    }
}

fn build_layout(hp: &Hyperparams) -> (Layout, Vec<(String, Vec<usize>, Init)>) {
    let d = hp.d_model;
    let mut b = Builder { blocks: Vec::new() };
    let embed = b.add("embed".into(), vec![hp.vocab_size, d], Init::Uniform);
    let enc_pos = b.add("enc_pos".into(), vec![hp.max_len, d], Init::Uniform);
    let dec_pos = b.add("dec_pos".into(), vec![hp.max_len, d], Init::Uniform);
    let enc_layers = (0..hp.n_enc_layers)
        .map(|l| {
            let p = format!("enc.{l}");
            EncLayerIds {
                ln_attn: b.norm(&format!("{p}.ln_attn"), d),
                attn: b.attn(&format!("{p}.attn"), d),
                ln_ffn: b.norm(&format!("{p}.ln_ffn"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, hp.d_ff),
            }
        })
        .collect();
    let enc_ln = b.norm("enc.ln_final", d);
    let dec_layers = (0..hp.n_dec_layers)
        .map(|l| {
            let p = format!("dec.{l}");
            DecLayerIds {
                ln_self: b.norm(&format!("{p}.ln_self"), d),
                self_attn: b.attn(&format!("{p}.self_attn"), d),
                ln_cross: b.norm(&format!("{p}.ln_cross"), d),
                cross_attn: b.attn(&format!("{p}.cross_attn"), d),
                ln_ffn: b.norm(&format!("{p}.ln_ffn"), d),
                ffn: b.ffn(&format!("{p}.ffn"), d, hp.d_ff),
            }
        })
        .collect();
    let dec_ln = b.norm("dec.ln_final", d);
    let mlm_w = b.add("mlm.w".into(), vec![d, d], Init::Uniform);
    let mlm_b = b.add("mlm.b".into(), vec![d], Init::Zeros);
    let mlm_ln = b.norm("mlm.ln", d);
    let layout = Layout {
        embed,
        enc_pos,
        dec_pos,
        enc_layers,
        enc_ln,
        dec_layers,
        dec_ln,
        mlm_w,
        mlm_b,
        mlm_ln,
    };
    (layout, b.blocks)
}

impl ModelParams {
    /// Weights uniform in `±1/sqrt(d_model)`, biases zero, norm gains one.
    pub fn init(hp: Hyperparams, seed: u64) -> Result<Self, ModelError> {
        hp.validate()?;
        let (layout, specs) = build_layout(&hp);
        let mut rng = substream(seed, &[b"init"]);
        let bound = 1.0 / (hp.d_model as f64).sqrt();
        let blocks = specs
            .into_iter()
            .map(|(name, shape, init)| {
                let n: usize = shape.iter().product();
                let data = match init {
                    Init::Uniform => (0..n).map(|_| rng.gen_range(-bound..bound)).collect(),
                    Init::Zeros => vec![0.0; n],
                    Init::Ones => vec![1.0; n],
                };
                ParamBlock { name, tensor: Tensor::new(shape, data) }
            })
            .collect();
        Ok(Self { hp, blocks, layout })
    }

    /// Rebuild from named blocks, checking names and shapes against the
    /// layout implied by `hp`.
    pub fn from_blocks(hp: Hyperparams, blocks: Vec<ParamBlock>) -> Result<Self, ModelError> {
        hp.validate()?;
        let (layout, specs) = build_layout(&hp);
        if specs.len() != blocks.len() {
            return Err(ModelError::Shape(format!(
                "expected {} parameter blocks, got {}",
                specs.len(),
                blocks.len()
            )));
        }
        for ((name, shape, _), block) in specs.iter().zip(&blocks) {
            if *name != block.name || shape.as_slice() != block.tensor.shape() {
                return Err(ModelError::Shape(format!(
                    "block {} {:?} does not match expected {} {:?}",
                    block.name,
                    block.tensor.shape(),
                    name,
                    shape
                )));
            }
        }
        Ok(Self { hp, blocks, layout })
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hp
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [ParamBlock] {
        &mut self.blocks
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.blocks[id.0].tensor
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.blocks[id.0].tensor
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.blocks.iter().position(|b| b.name == name).map(ParamId)
    }

    pub fn num_parameters(&self) -> usize {
        self.blocks.iter().map(|b| b.tensor.numel()).sum()
    }

    /// SHA-256 over block names, shapes and the little-endian bytes of every
    /// value.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for b in &self.blocks {
            h.update(b.name.as_bytes());
            for &s in b.tensor.shape() {
                h.update((s as u64).to_le_bytes());
            }
            for &v in b.tensor.data() {
                h.update(v.to_le_bytes());
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Hyperparams {
        Hyperparams { vocab_size: 12, d_model: 8, n_enc_layers: 1, n_dec_layers: 1, n_heads: 2, d_ff: 16, max_len: 10 }
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = ModelParams::init(tiny(), 1).unwrap();
        let b = ModelParams::init(tiny(), 1).unwrap();
        let c = ModelParams::init(tiny(), 2).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.checksum(), b.checksum());
        assert_ne!(a.checksum(), c.checksum());
        let bound = 1.0 / 8f64.sqrt();
        let e = a.get(a.layout().embed);
        assert!(e.data().iter().all(|v| v.abs() <= bound));
        let b1 = a.get(a.find("enc.0.ffn.b1").unwrap());
        assert!(b1.data().iter().all(|&v| v == 0.0));
        let g = a.get(a.layout().dec_ln.gamma);
        assert!(g.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn from_blocks_checks_layout() {
        let a = ModelParams::init(tiny(), 1).unwrap();
        let again = ModelParams::from_blocks(tiny(), a.blocks().to_vec()).unwrap();
        assert_eq!(a, again);
        let mut blocks = a.blocks().to_vec();
        blocks.swap(0, 1);
        assert!(ModelParams::from_blocks(tiny(), blocks).is_err());
    }

    #[test]
    fn rejects_bad_head_split() {
        let hp = Hyperparams { n_heads: 3, ..tiny() };
        assert!(matches!(ModelParams::init(hp, 0), Err(ModelError::InvalidConfig(_))));
    }
}
