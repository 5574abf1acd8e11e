//! Binary checkpoint: magic, format version, hyperparameters, named blocks
//! of little-endian `f64`, and a trailing SHA-256 of everything before it.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::params::{hex, ParamBlock};
use super::{Hyperparams, ModelError, ModelParams, Tensor};

pub const MAGIC: &[u8; 8] = b"GUWENCKP";
pub const FORMAT_VERSION: u32 = 1;

pub fn to_bytes(params: &ModelParams) -> Vec<u8> {
    let hp = params.hyperparams();
    let mut out = Vec::with_capacity(64 + params.num_parameters() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [hp.vocab_size, hp.d_model, hp.n_enc_layers, hp.n_dec_layers, hp.n_heads, hp.d_ff, hp.max_len] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&(params.blocks().len() as u64).to_le_bytes());
    for b in params.blocks() {
        out.extend_from_slice(&(b.name.len() as u32).to_le_bytes());
        out.extend_from_slice(b.name.as_bytes());
        out.extend_from_slice(&(b.tensor.shape().len() as u32).to_le_bytes());
        for &s in b.tensor.shape() {
            out.extend_from_slice(&(s as u64).to_le_bytes());
        }
        for &v in b.tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| ModelError::Checkpoint("truncated checkpoint".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<usize, ModelError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| ModelError::Checkpoint(format!("size {v} does not fit")))
    }
}

pub fn from_bytes(bytes: &[u8]) -> Result<ModelParams, ModelError> {
    let bad = |m: &str| ModelError::Checkpoint(m.to_string());
    if bytes.len() < MAGIC.len() + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(bad("checksum mismatch"));
    }
    let mut r = Reader { buf: body, pos: MAGIC.len() };
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported format version {version}")));
    }
    let hp = Hyperparams {
        vocab_size: r.u64()?,
        d_model: r.u64()?,
        n_enc_layers: r.u64()?,
        n_dec_layers: r.u64()?,
        n_heads: r.u64()?,
        d_ff: r.u64()?,
        max_len: r.u64()?,
    };
    let count = r.u64()?;
    let mut blocks = Vec::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| bad("block name is not UTF-8"))?;
        let ndim = r.u32()? as usize;
        let shape = (0..ndim).map(|_| r.u64()).collect::<Result<Vec<_>, _>>()?;
        let n = shape.iter().try_fold(1usize, |a, &s| a.checked_mul(s)).ok_or_else(|| bad("block too large"))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| bad("block too large"))?)?;
        let data = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        blocks.push(ParamBlock { name, tensor: Tensor::new(shape, data) });
    }
    if r.pos != body.len() {
        return Err(bad("trailing bytes after the last block"));
    }
    ModelParams::from_blocks(hp, blocks)
}

/// One line per block: name, shape and SHA-256 of its values, then the
/// checksum of the whole parameter set.
pub fn manifest(params: &ModelParams) -> String {
    let mut out = String::new();
    let hp = params.hyperparams();
    let _ = writeln!(
        out,
        "# vocab_size={} d_model={} n_enc_layers={} n_dec_layers={} n_heads={} d_ff={} max_len={}",
        hp.vocab_size, hp.d_model, hp.n_enc_layers, hp.n_dec_layers, hp.n_heads, hp.d_ff, hp.max_len
    );
    for b in params.blocks() {
        let mut h = Sha256::new();
        for &v in b.tensor.data() {
            h.update(v.to_le_bytes());
        }
        let shape: Vec<String> = b.tensor.shape().iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}\t{}\t{}", b.name, shape.join("x"), hex(&h.finalize()));
    }
    let _ = writeln!(out, "params\t{}\t{}", params.num_parameters(), params.checksum());
    out
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

/// Write the checkpoint and its manifest next to it.
pub fn save(params: &ModelParams, path: &Path) -> Result<(), ModelError> {
    let io = |p: &Path, e: std::io::Error| ModelError::Io { path: p.display().to_string(), msg: e.to_string() };
    fs::write(path, to_bytes(params)).map_err(|e| io(path, e))?;
    let mp = manifest_path(path);
    fs::write(&mp, manifest(params)).map_err(|e| io(&mp, e))
}

pub fn load(path: &Path) -> Result<ModelParams, ModelError> {
    let bytes = fs::read(path).map_err(|e| ModelError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    from_bytes(&bytes)
}
