use serde::{Deserialize, Serialize};

use super::graph::Gradients;
use super::{ModelError, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay, applied to matrices only.
    pub weight_decay: f64,
    /// Rescale gradients whose global norm exceeds this value.
    #[serde(default)]
    pub clip_norm: Option<f64>,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 3e-5,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            clip_norm: None,
        }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad("lr must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("betas must lie in [0, 1)");
        }
        if !(self.eps > 0.0) || !(self.weight_decay >= 0.0) {
            return bad("eps must be positive and weight_decay non-negative");
        }
        if matches!(self.clip_norm, Some(c) if !(c > 0.0)) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }
}

/// First and second moment estimates for every parameter block.
#[derive(Debug, Clone)]
pub struct AdamW {
    cfg: AdamWConfig,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl AdamW {
    pub fn new(cfg: AdamWConfig, params: &ModelParams) -> Result<Self, ModelError> {
        cfg.validate()?;
        let zeros = || params.blocks().iter().map(|b| vec![0.0; b.tensor.numel()]).collect();
        Ok(Self { cfg, m: zeros(), v: zeros(), step: 0 })
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamWConfig {
        &self.cfg
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        let c = self.cfg;
        self.step += 1;
        let scale = match c.clip_norm {
            Some(max) => {
                let norm = grads.global_norm();
                if norm > max { max / norm } else { 1.0 }
            }
            None => 1.0,
        };
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for (i, block) in params.blocks_mut().iter_mut().enumerate() {
            let decay = if block.tensor.shape().len() == 2 { c.weight_decay } else { 0.0 };
            let g = grads.blocks[i].data();
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for (j, p) in block.tensor.data_mut().iter_mut().enumerate() {
                let gj = g[j] * scale;
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
                let mhat = m[j] / bc1;
                let vhat = v[j] / bc2;
                *p -= c.lr * (mhat / (vhat.sqrt() + c.eps) + decay * *p);
            }
        }
    }
}
