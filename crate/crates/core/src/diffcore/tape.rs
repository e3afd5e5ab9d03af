//! Eagerly evaluated Wengert tape.
//!
//! Every primitive computes its value immediately and appends a node; [`Tape::backward`]
//! walks the nodes in exact reverse order, so gradient accumulation is deterministic.

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Index of a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Relu(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    Sqrt(NodeId),
    /// Mean softmax cross-entropy; keeps the softmax probabilities for backward.
    SoftmaxCrossEntropy {
        logits: NodeId,
        labels: Vec<usize>,
        probs: Vec<f64>,
    },
    ReduceMean(NodeId),
    ReduceSum(NodeId),
}

#[derive(Debug, Clone)]
struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Gradients produced by one backward pass, indexed by node.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient of the loss w.r.t. the leaf `node`, or `None` if the loss does not depend
    /// on it. Intermediate nodes are not retained.
    pub fn get(&self, node: NodeId) -> Option<&[f64]> {
        self.grads.get(node.0).and_then(|g| g.as_deref())
    }

    /// Gradient w.r.t. `node`, materialising zeros when the loss does not depend on it.
    pub fn get_or_zeros(&self, node: NodeId) -> Vec<f64> {
        match self.get(node) {
            Some(g) => g.to_vec(),
            None => vec![0.0; self.shapes[node.0].iter().product()],
        }
    }
}

/// Single-owner record of primitive operations.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Differentiable leaf.
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value, true)
    }

    /// Non-differentiable leaf (inputs, masks, fixed noise).
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(Op::Leaf, value, false)
    }

    pub fn value(&self, node: NodeId) -> &Tensor {
        &self.nodes[node.0].value
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> NodeId {
        self.nodes.push(Node { op, value, requires_grad });
        NodeId(self.nodes.len() - 1)
    }

    fn node(&self, id: NodeId, op: &'static str) -> Result<&Node> {
        self.nodes.get(id.0).ok_or_else(|| Error::Shape { op, detail: format!("unknown node {}", id.0) })
    }

    fn grad_flag(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// `(m×k) · (k×n) → (m×n)`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (av, bv) = (&self.node(a, "matmul")?.value, &self.node(b, "matmul")?.value);
        if av.shape().len() != 2 || bv.shape().len() != 2 || av.shape()[1] != bv.shape()[0] {
            return Err(Error::Shape {
                op: "matmul",
                detail: format!("cannot multiply {:?} by {:?}", av.shape(), bv.shape()),
            });
        }
        let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
        let value = Tensor::matrix(m, n, matmul(av.data(), bv.data(), m, k, n))?;
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::MatMul(a, b), value, rg))
    }

    /// Broadcast a length-`n` bias over the rows of an `(m×n)` matrix.
    pub fn add_bias(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (av, bv) = (&self.node(a, "add_bias")?.value, &self.node(bias, "add_bias")?.value);
        if av.shape().len() != 2 || bv.len() != av.shape()[1] {
            return Err(Error::Shape {
                op: "add_bias",
                detail: format!("bias {:?} does not match rows of {:?}", bv.shape(), av.shape()),
            });
        }
        let n = bv.len();
        let mut value = av.clone();
        for (i, v) in value.data_mut().iter_mut().enumerate() {
            *v += bv.data()[i % n];
        }
        let rg = self.grad_flag(&[a, bias]);
        Ok(self.push(Op::AddBias(a, bias), value, rg))
    }

    fn same_shape(&self, a: NodeId, b: NodeId, op: &'static str) -> Result<()> {
        let (av, bv) = (&self.node(a, op)?.value, &self.node(b, op)?.value);
        if av.shape() != bv.shape() {
            return Err(Error::Shape { op, detail: format!("{:?} vs {:?}", av.shape(), bv.shape()) });
        }
        Ok(())
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "add")?;
        let bv = self.nodes[b.0].value.data();
        let mut value = self.nodes[a.0].value.clone();
        value.data_mut().iter_mut().zip(bv).for_each(|(x, y)| *x += y);
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::Add(a, b), value, rg))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        self.same_shape(a, b, "mul")?;
        let bv = self.nodes[b.0].value.data();
        let mut value = self.nodes[a.0].value.clone();
        value.data_mut().iter_mut().zip(bv).for_each(|(x, y)| *x *= y);
        let rg = self.grad_flag(&[a, b]);
        Ok(self.push(Op::Mul(a, b), value, rg))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> Result<NodeId> {
        let value = self.node(a, "scale")?.value.map(|v| v * factor);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Scale(a, factor), value, rg))
    }

    /// Elementwise `max(x, 0)`; the subgradient at 0 is 0.
    pub fn relu(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.node(a, "relu")?.value.map(|v| v.max(0.0));
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Relu(a), value, rg))
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.node(a, "tanh")?.value.map(f64::tanh);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Tanh(a), value, rg))
    }

    pub fn exp(&mut self, a: NodeId) -> Result<NodeId> {
        let value = self.node(a, "exp")?.value.map(f64::exp);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Exp(a), value, rg))
    }

    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId> {
        let input = &self.node(a, "sqrt")?.value;
        if let Some(i) = input.data().iter().position(|&v| v < 0.0) {
            return Err(Error::NonFinite { context: "sqrt of a negative value", coordinate: i });
        }
        let value = input.map(f64::sqrt);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::Sqrt(a), value, rg))
    }

    /// Mean cross-entropy of `softmax(logits)` against integer labels.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let lv = &self.node(logits, "softmax_cross_entropy")?.value;
        if lv.shape().len() != 2 || lv.shape()[0] != labels.len() {
            return Err(Error::Shape {
                op: "softmax_cross_entropy",
                detail: format!("logits {:?} vs {} labels", lv.shape(), labels.len()),
            });
        }
        let (m, c) = (lv.shape()[0], lv.shape()[1]);
        if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
            return Err(Error::Shape {
                op: "softmax_cross_entropy",
                detail: format!("label {bad} out of range for {c} classes"),
            });
        }
        let mut probs = Vec::with_capacity(m * c);
        let mut total = 0.0;
        for (r, &y) in labels.iter().enumerate() {
            let row = lv.row(r);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|&z| (z - max).exp()).sum();
            let log_z = max + sum.ln();
            total += log_z - row[y];
            probs.extend(row.iter().map(|&z| (z - log_z).exp()));
        }
        let value = Tensor::scalar(total / m as f64);
        let rg = self.grad_flag(&[logits]);
        Ok(self.push(Op::SoftmaxCrossEntropy { logits, labels: labels.to_vec(), probs }, value, rg))
    }

    pub fn reduce_mean(&mut self, a: NodeId) -> Result<NodeId> {
        let av = &self.node(a, "reduce_mean")?.value;
        let value = Tensor::scalar(av.data().iter().sum::<f64>() / av.len() as f64);
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::ReduceMean(a), value, rg))
    }

    pub fn reduce_sum(&mut self, a: NodeId) -> Result<NodeId> {
        let av = &self.node(a, "reduce_sum")?.value;
        let value = Tensor::scalar(av.data().iter().sum());
        let rg = self.grad_flag(&[a]);
        Ok(self.push(Op::ReduceSum(a), value, rg))
    }

    /// Reverse-mode gradient of the scalar node `loss` w.r.t. every differentiable node.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients> {
        let len = self.nodes.len();
        if loss.0 >= len {
            return Err(Error::NotRecorded { node: loss.0, len });
        }
        let lv = &self.nodes[loss.0].value;
        if !lv.is_scalar() {
            return Err(Error::NonScalarLoss { shape: lv.shape().to_vec() });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; len];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            // intermediates are dropped once propagated; leaves keep theirs
            let Some(upstream) = grads[idx].take() else {
                continue;
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (av.shape()[0], av.shape()[1], bv.shape()[1]);
                    if self.nodes[a.0].requires_grad {
                        // dA = dC · Bᵀ
                        let mut da = vec![0.0; m * k];
                        for i in 0..m {
                            for j in 0..n {
                                let g = upstream[i * n + j];
                                if g == 0.0 {
                                    continue;
                                }
                                for p in 0..k {
                                    da[i * k + p] += g * bv.data()[p * n + j];
                                }
                            }
                        }
                        accumulate(&mut grads, *a, da);
                    }
                    if self.nodes[b.0].requires_grad {
                        // dB = Aᵀ · dC
                        let mut db = vec![0.0; k * n];
                        for i in 0..m {
                            for p in 0..k {
                                let x = av.data()[i * k + p];
                                if x == 0.0 {
                                    continue;
                                }
                                for j in 0..n {
                                    db[p * n + j] += x * upstream[i * n + j];
                                }
                            }
                        }
                        accumulate(&mut grads, *b, db);
                    }
                }
                Op::AddBias(a, bias) => {
                    let n = self.nodes[bias.0].value.len();
                    if self.nodes[bias.0].requires_grad {
                        let mut db = vec![0.0; n];
                        for (i, g) in upstream.iter().enumerate() {
                            db[i % n] += g;
                        }
                        accumulate(&mut grads, *bias, db);
                    }
                    if self.nodes[a.0].requires_grad {
                        accumulate(&mut grads, *a, upstream);
                    }
                }
                Op::Add(a, b) => {
                    if self.nodes[b.0].requires_grad {
                        accumulate(&mut grads, *b, upstream.clone());
                    }
                    if self.nodes[a.0].requires_grad {
                        accumulate(&mut grads, *a, upstream);
                    }
                }
                Op::Mul(a, b) => {
                    let (av, bv) = (self.nodes[a.0].value.data(), self.nodes[b.0].value.data());
                    if self.nodes[b.0].requires_grad {
                        let db = upstream.iter().zip(av).map(|(g, x)| g * x).collect();
                        accumulate(&mut grads, *b, db);
                    }
                    if self.nodes[a.0].requires_grad {
                        let da = upstream.iter().zip(bv).map(|(g, y)| g * y).collect();
                        accumulate(&mut grads, *a, da);
                    }
                }
                Op::Scale(a, factor) => {
                    let da = upstream.iter().map(|g| g * factor).collect();
                    accumulate(&mut grads, *a, da);
                }
                Op::Relu(a) => {
                    let x = self.nodes[a.0].value.data();
                    let da = upstream.iter().zip(x).map(|(g, &v)| if v > 0.0 { *g } else { 0.0 }).collect();
                    accumulate(&mut grads, *a, da);
                }
                Op::Tanh(a) => {
                    let y = node.value.data();
                    let da = upstream.iter().zip(y).map(|(g, t)| g * (1.0 - t * t)).collect();
                    accumulate(&mut grads, *a, da);
                }
                Op::Exp(a) => {
                    let y = node.value.data();
                    let da = upstream.iter().zip(y).map(|(g, e)| g * e).collect();
                    accumulate(&mut grads, *a, da);
                }
                Op::Sqrt(a) => {
                    let y = node.value.data();
                    let da = upstream.iter().zip(y).map(|(g, &s)| if s > 0.0 { g * 0.5 / s } else { 0.0 }).collect();
                    accumulate(&mut grads, *a, da);
                }
                Op::SoftmaxCrossEntropy { logits, labels, probs } => {
                    let m = labels.len();
                    let c = probs.len() / m;
                    let scale = upstream[0] / m as f64;
                    let mut da: Vec<f64> = probs.iter().map(|p| p * scale).collect();
                    for (r, &y) in labels.iter().enumerate() {
                        da[r * c + y] -= scale;
                    }
                    accumulate(&mut grads, *logits, da);
                }
                Op::ReduceMean(a) => {
                    let n = self.nodes[a.0].value.len();
                    accumulate(&mut grads, *a, vec![upstream[0] / n as f64; n]);
                }
                Op::ReduceSum(a) => {
                    let n = self.nodes[a.0].value.len();
                    accumulate(&mut grads, *a, vec![upstream[0]; n]);
                }
            }
        }
        Ok(Gradients { grads, shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect() })
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], node: NodeId, delta: Vec<f64>) {
    match &mut grads[node.0] {
        Some(existing) => existing.iter_mut().zip(&delta).for_each(|(e, d)| *e += d),
        slot @ None => *slot = Some(delta),
    }
}

pub(crate) fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let x = a[i * k + p];
            if x == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            row.iter_mut().zip(brow).for_each(|(o, w)| *o += x * w);
        }
    }
    out
}
