//! Tape-based reverse-mode differentiation over 2-D tensors.
//!
//! Every node's value is computed eagerly when the node is created; the tape
//! is then walked backwards once by [`Graph::backward`].

use super::params::{ModelParams, ParamId};
use super::tensor::{gemm, Tensor};
use super::ModelError;

const LN_EPS: f64 = 1e-5;
const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Rows `q_start..q_start+q_len` attend to rows `k_start..k_start+k_len`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttnSpan {
    pub q_start: usize,
    pub q_len: usize,
    pub k_start: usize,
    pub k_len: usize,
}

/// One term `weight * -logp[row, col]` of a negative log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pick {
    pub row: usize,
    pub col: usize,
    pub weight: f64,
}

enum Op {
    Constant,
    Param(ParamId),
    Gather { table: Var, ids: Vec<usize> },
    Add(Var, Var),
    Linear { x: Var, w: Var, b: Var },
    MatMulT { x: Var, w: Var },
    LayerNorm { x: Var, gamma: Var, beta: Var, xhat: Vec<f64>, inv_std: Vec<f64> },
    Gelu(Var),
    Attention { q: Var, k: Var, v: Var, heads: usize, spans: Vec<AttnSpan>, causal: bool, probs: Vec<f64> },
    LogSoftmax(Var),
    Nll { logp: Var, picks: Vec<Pick> },
    WeightedSum(Vec<(Var, f64)>),
    HalfSumSquares(Var),
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Gradients for every parameter block, zero where the loss does not
/// depend on the block.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub blocks: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Self {
            blocks: params.blocks().iter().map(|b| Tensor::zeros(b.tensor.shape())).collect(),
        }
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.blocks[id.0]
    }

    pub fn global_norm(&self) -> f64 {
        self.blocks.iter().map(Tensor::sum_squares).sum::<f64>().sqrt()
    }
}

pub struct Graph<'p> {
    params: &'p ModelParams,
    nodes: Vec<Node>,
    consumed: bool,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ModelParams) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            consumed: false,
        }
    }

    pub fn params(&self) -> &'p ModelParams {
        self.params
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        match self.nodes[v.0].op {
            Op::Param(id) => &self.params.blocks()[id.0].tensor,
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Op::Constant, t)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        self.push(Op::Param(id), Tensor::zeros(&[0]))
    }

    /// Rows of `table` selected by `ids`.
    pub fn gather(&mut self, table: Var, ids: Vec<usize>) -> Var {
        let t = self.value(table);
        let d = t.cols();
        let rows = t.rows();
        let mut data = Vec::with_capacity(ids.len() * d);
        for &i in &ids {
            assert!(i < rows, "gather index {i} out of {rows} rows");
            data.extend_from_slice(t.row(i));
        }
        let value = Tensor::new(vec![ids.len(), d], data);
        self.push(Op::Gather { table, ids }, value)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        assert_eq!(x.shape(), y.shape(), "add shape mismatch");
        let data = x.data().iter().zip(y.data()).map(|(p, q)| p + q).collect();
        let value = Tensor::new(x.shape().to_vec(), data);
        self.push(Op::Add(a, b), value)
    }

    /// `x[n, i] * w[i, o] + b[o]`.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Var {
        let (xt, wt, bt) = (self.value(x), self.value(w), self.value(b));
        let (n, i) = (xt.rows(), xt.cols());
        assert_eq!(wt.shape(), &[i, wt.cols()], "linear weight shape");
        let o = wt.cols();
        assert_eq!(bt.numel(), o, "linear bias shape");
        let mut out = Vec::with_capacity(n * o);
        for _ in 0..n {
            out.extend_from_slice(bt.data());
        }
        gemm(n, i, o, xt.data(), false, wt.data(), false, &mut out, true);
        let value = Tensor::new(vec![n, o], out);
        self.push(Op::Linear { x, w, b }, value)
    }

    /// `x[n, d] * w[v, d]^T`.
    pub fn matmul_t(&mut self, x: Var, w: Var) -> Var {
        let (xt, wt) = (self.value(x), self.value(w));
        let (n, d, v) = (xt.rows(), xt.cols(), wt.rows());
        assert_eq!(wt.cols(), d, "matmul_t inner dimension");
        let mut out = vec![0.0; n * v];
        gemm(n, d, v, xt.data(), false, wt.data(), true, &mut out, false);
        self.push(Op::MatMulT { x, w }, Tensor::new(vec![n, v], out))
    }

    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var) -> Var {
        let (xt, g, b) = (self.value(x), self.value(gamma), self.value(beta));
        let (n, d) = (xt.rows(), xt.cols());
        assert_eq!(g.numel(), d);
        assert_eq!(b.numel(), d);
        let mut xhat = vec![0.0; n * d];
        let mut inv_std = vec![0.0; n];
        let mut out = vec![0.0; n * d];
        for r in 0..n {
            let row = xt.row(r);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + LN_EPS).sqrt();
            inv_std[r] = is;
            for c in 0..d {
                let h = (row[c] - mean) * is;
                xhat[r * d + c] = h;
                out[r * d + c] = h * g.data()[c] + b.data()[c];
            }
        }
        let value = Tensor::new(vec![n, d], out);
        self.push(Op::LayerNorm { x, gamma, beta, xhat, inv_std }, value)
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let xt = self.value(x);
        let data = xt
            .data()
            .iter()
            .map(|&v| 0.5 * v * (1.0 + (GELU_C * (v + 0.044715 * v * v * v)).tanh()))
            .collect();
        let value = Tensor::new(xt.shape().to_vec(), data);
        self.push(Op::Gelu(x), value)
    }

    /// Multi-head scaled dot-product attention over packed sequences.
    /// With `causal`, query `i` of a span sees keys `0..=i` of that span.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize, spans: Vec<AttnSpan>, causal: bool) -> Var {
        let (qt, kt, vt) = (self.value(q), self.value(k), self.value(v));
        let d = qt.cols();
        assert_eq!(kt.cols(), d);
        assert_eq!(vt.cols(), d);
        assert_eq!(kt.rows(), vt.rows());
        assert!(heads > 0 && d % heads == 0, "d_model {d} not divisible by {heads} heads");
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let mut out = vec![0.0; qt.rows() * d];
        let mut probs = Vec::new();
        let mut scores = Vec::new();
        for s in &spans {
            assert!(s.q_start + s.q_len <= qt.rows() && s.k_start + s.k_len <= kt.rows());
            if causal {
                assert_eq!(s.q_len, s.k_len, "causal attention needs square spans");
            }
            for h in 0..heads {
                let off = h * dh;
                for i in 0..s.q_len {
                    let qrow = &qt.data()[(s.q_start + i) * d + off..][..dh];
                    let limit = if causal { i + 1 } else { s.k_len };
                    scores.clear();
                    for j in 0..limit {
                        let krow = &kt.data()[(s.k_start + j) * d + off..][..dh];
                        scores.push(scale * dot(qrow, krow));
                    }
                    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for sc in scores.iter_mut() {
                        *sc = (*sc - max).exp();
                        sum += *sc;
                    }
                    let orow = &mut out[(s.q_start + i) * d + off..][..dh];
                    for j in 0..s.k_len {
                        let p = if j < limit { scores[j] / sum } else { 0.0 };
                        probs.push(p);
                        if p != 0.0 {
                            let vrow = &vt.data()[(s.k_start + j) * d + off..][..dh];
                            for c in 0..dh {
                                orow[c] += p * vrow[c];
                            }
                        }
                    }
                }
            }
        }
        let value = Tensor::new(vec![qt.rows(), d], out);
        self.push(Op::Attention { q, k, v, heads, spans, causal, probs }, value)
    }

    /// Row-wise log-softmax.
    pub fn log_softmax(&mut self, x: Var) -> Var {
        let xt = self.value(x);
        let (n, c) = (xt.rows(), xt.cols());
        let mut out = vec![0.0; n * c];
        for r in 0..n {
            let row = xt.row(r);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for (o, v) in out[r * c..(r + 1) * c].iter_mut().zip(row) {
                *o = v - lse;
            }
        }
        let value = Tensor::new(vec![n, c], out);
        self.push(Op::LogSoftmax(x), value)
    }

    /// Scalar `-sum(weight * logp[row, col])`.
    pub fn nll(&mut self, logp: Var, picks: Vec<Pick>) -> Var {
        let lp = self.value(logp);
        let c = lp.cols();
        let total = picks
            .iter()
            .map(|p| {
                assert!(p.row < lp.rows() && p.col < c, "nll pick out of range");
                -p.weight * lp.data()[p.row * c + p.col]
            })
            .sum();
        self.push(Op::Nll { logp, picks }, Tensor::scalar(total))
    }

    /// Scalar `sum(c_i * s_i)` of scalar nodes.
    pub fn weighted_sum(&mut self, terms: Vec<(Var, f64)>) -> Var {
        let total = terms
            .iter()
            .map(|&(v, c)| {
                let t = self.value(v);
                assert_eq!(t.numel(), 1, "weighted_sum expects scalars");
                c * t.item()
            })
            .sum();
        self.push(Op::WeightedSum(terms), Tensor::scalar(total))
    }

    /// Scalar `0.5 * sum(x^2)`.
    pub fn half_sum_squares(&mut self, x: Var) -> Var {
        let total = 0.5 * self.value(x).sum_squares();
        self.push(Op::HalfSumSquares(x), Tensor::scalar(total))
    }

    /// Reverse pass from a scalar node. A graph can be differentiated once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients, ModelError> {
        if self.consumed {
            return Err(ModelError::GraphReused);
        }
        self.consumed = true;
        if self.value(loss).numel() != 1 {
            return Err(ModelError::Shape(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.value(loss).shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        let mut out = Gradients::zeros_like(self.params);
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => out.blocks[id.0].add_assign(&g),
                Op::Gather { table, ids } => {
                    let tt = self.value(*table);
                    let d = tt.cols();
                    let mut dt = Tensor::zeros(tt.shape());
                    for (r, &i) in ids.iter().enumerate() {
                        let dst = &mut dt.data_mut()[i * d..(i + 1) * d];
                        for (a, b) in dst.iter_mut().zip(g.row(r)) {
                            *a += b;
                        }
                    }
                    accumulate(&mut grads, *table, dt);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *b, g.clone());
                    accumulate(&mut grads, *a, g);
                }
                Op::Linear { x, w, b } => {
                    let (xt, wt) = (self.value(*x), self.value(*w));
                    let (n, i, o) = (xt.rows(), xt.cols(), wt.cols());
                    let mut dx = vec![0.0; n * i];
                    gemm(n, o, i, g.data(), false, wt.data(), true, &mut dx, false);
                    let mut dw = vec![0.0; i * o];
                    gemm(i, n, o, xt.data(), true, g.data(), false, &mut dw, false);
                    let mut db = vec![0.0; o];
                    for r in 0..n {
                        for (a, v) in db.iter_mut().zip(g.row(r)) {
                            *a += v;
                        }
                    }
                    let bshape = self.value(*b).shape().to_vec();
                    accumulate(&mut grads, *x, Tensor::new(vec![n, i], dx));
                    accumulate(&mut grads, *w, Tensor::new(vec![i, o], dw));
                    accumulate(&mut grads, *b, Tensor::new(bshape, db));
                }
                Op::MatMulT { x, w } => {
                    let (xt, wt) = (self.value(*x), self.value(*w));
                    let (n, d, v) = (xt.rows(), xt.cols(), wt.rows());
                    let mut dx = vec![0.0; n * d];
                    gemm(n, v, d, g.data(), false, wt.data(), false, &mut dx, false);
                    let mut dw = vec![0.0; v * d];
                    gemm(v, n, d, g.data(), true, xt.data(), false, &mut dw, false);
                    accumulate(&mut grads, *x, Tensor::new(vec![n, d], dx));
                    accumulate(&mut grads, *w, Tensor::new(vec![v, d], dw));
                }
                Op::LayerNorm { x, gamma, beta, xhat, inv_std } => {
                    let gm = self.value(*gamma);
                    let (n, d) = (g.rows(), g.cols());
                    let mut dx = vec![0.0; n * d];
                    let mut dg = vec![0.0; d];
                    let mut db = vec![0.0; d];
                    let mut dxhat = vec![0.0; d];
                    for r in 0..n {
                        let gy = g.row(r);
                        let xh = &xhat[r * d..(r + 1) * d];
                        let mut mean_dxhat = 0.0;
                        let mut mean_dxhat_xhat = 0.0;
                        for c in 0..d {
                            dxhat[c] = gy[c] * gm.data()[c];
                            dg[c] += gy[c] * xh[c];
                            db[c] += gy[c];
                            mean_dxhat += dxhat[c];
                            mean_dxhat_xhat += dxhat[c] * xh[c];
                        }
                        mean_dxhat /= d as f64;
                        mean_dxhat_xhat /= d as f64;
                        for c in 0..d {
                            dx[r * d + c] = inv_std[r] * (dxhat[c] - mean_dxhat - xh[c] * mean_dxhat_xhat);
                        }
                    }
                    let gshape = gm.shape().to_vec();
                    let bshape = self.value(*beta).shape().to_vec();
                    accumulate(&mut grads, *x, Tensor::new(vec![n, d], dx));
                    accumulate(&mut grads, *gamma, Tensor::new(gshape, dg));
                    accumulate(&mut grads, *beta, Tensor::new(bshape, db));
                }
                Op::Gelu(x) => {
                    let xt = self.value(*x);
                    let data = xt
                        .data()
                        .iter()
                        .zip(g.data())
                        .map(|(&v, &gy)| {
                            let t = (GELU_C * (v + 0.044715 * v * v * v)).tanh();
                            let dt = GELU_C * (1.0 + 3.0 * 0.044715 * v * v);
                            gy * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * dt)
                        })
                        .collect();
                    accumulate(&mut grads, *x, Tensor::new(xt.shape().to_vec(), data));
                }
                Op::Attention { q, k, v, heads, spans, causal, probs } => {
                    let (qt, kt, vt) = (self.value(*q), self.value(*k), self.value(*v));
                    let d = qt.cols();
                    let dh = d / heads;
                    let scale = 1.0 / (dh as f64).sqrt();
                    let mut dq = vec![0.0; qt.numel()];
                    let mut dk = vec![0.0; kt.numel()];
                    let mut dv = vec![0.0; vt.numel()];
                    let mut dp = Vec::new();
                    let mut off_p = 0;
                    for s in spans {
                        for h in 0..*heads {
                            let off = h * dh;
                            for i in 0..s.q_len {
                                let p = &probs[off_p..off_p + s.k_len];
                                off_p += s.k_len;
                                let limit = if *causal { i + 1 } else { s.k_len };
                                let qi = (s.q_start + i) * d + off;
                                let go = &g.data()[qi..qi + dh];
                                dp.clear();
                                let mut weighted = 0.0;
                                for j in 0..limit {
                                    let vj = (s.k_start + j) * d + off;
                                    let dpj = dot(go, &vt.data()[vj..vj + dh]);
                                    weighted += p[j] * dpj;
                                    dp.push(dpj);
                                    for c in 0..dh {
                                        dv[vj + c] += p[j] * go[c];
                                    }
                                }
                                for j in 0..limit {
                                    let ds = p[j] * (dp[j] - weighted) * scale;
                                    if ds == 0.0 {
                                        continue;
                                    }
                                    let kj = (s.k_start + j) * d + off;
                                    for c in 0..dh {
                                        dq[qi + c] += ds * kt.data()[kj + c];
                                        dk[kj + c] += ds * qt.data()[qi + c];
                                    }
                                }
                            }
                        }
                    }
                    let (qs, ks, vs) = (qt.shape().to_vec(), kt.shape().to_vec(), vt.shape().to_vec());
                    accumulate(&mut grads, *q, Tensor::new(qs, dq));
                    accumulate(&mut grads, *k, Tensor::new(ks, dk));
                    accumulate(&mut grads, *v, Tensor::new(vs, dv));
                }
                Op::LogSoftmax(x) => {
                    let y = &node.value;
                    let (n, c) = (y.rows(), y.cols());
                    let mut dx = vec![0.0; n * c];
                    for r in 0..n {
                        let gy = g.row(r);
                        let total: f64 = gy.iter().sum();
                        if total == 0.0 && gy.iter().all(|&v| v == 0.0) {
                            continue;
                        }
                        for (k, (o, &yv)) in dx[r * c..(r + 1) * c].iter_mut().zip(y.row(r)).enumerate() {
                            *o = gy[k] - yv.exp() * total;
                        }
                    }
                    accumulate(&mut grads, *x, Tensor::new(vec![n, c], dx));
                }
                Op::Nll { logp, picks } => {
                    let lp = self.value(*logp);
                    let c = lp.cols();
                    let mut d = Tensor::zeros(lp.shape());
                    let gv = g.item();
                    for p in picks {
                        d.data_mut()[p.row * c + p.col] -= p.weight * gv;
                    }
                    accumulate(&mut grads, *logp, d);
                }
                Op::WeightedSum(terms) => {
                    let gv = g.item();
                    for &(v, c) in terms {
                        let shape = self.value(v).shape().to_vec();
                        accumulate(&mut grads, v, Tensor::new(shape, vec![c * gv]));
                    }
                }
                Op::HalfSumSquares(x) => {
                    let xt = self.value(*x);
                    let gv = g.item();
                    let data = xt.data().iter().map(|v| v * gv).collect();
                    accumulate(&mut grads, *x, Tensor::new(xt.shape().to_vec(), data));
                }
            }
        }
        Ok(out)
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
