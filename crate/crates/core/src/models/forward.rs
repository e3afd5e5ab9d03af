//! Deterministic and stochastic forward passes recorded on a [`Tape`].

use rand::Rng;

use super::params::FlatParams;
use super::posterior::GaussianPosterior;
use super::spec::{Activation, MlpSpec};
use crate::diffcore::{NodeId, Tape, Tensor};
use crate::error::{invalid, Error, Result};
use crate::rng::standard_normal_vec;

/// Inverted-dropout masks, one `(batch, width)` tensor per hidden layer with entries in
/// `{0, 1/keep_prob}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    keep_prob: f64,
    masks: Vec<Tensor>,
}

impl DropoutMasks {
    pub fn sample<R: Rng + ?Sized>(spec: &MlpSpec, batch: usize, keep_prob: f64, rng: &mut R) -> Result<Self> {
        check_keep_prob(keep_prob)?;
        let masks = spec
            .hidden_widths()
            .iter()
            .map(|&w| {
                let data = (0..batch * w)
                    .map(|_| if keep_prob >= 1.0 || rng.random::<f64>() < keep_prob { 1.0 / keep_prob } else { 0.0 })
                    .collect();
                Tensor::matrix(batch, w, data)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { keep_prob, masks })
    }

    pub fn keep_prob(&self) -> f64 {
        self.keep_prob
    }

    pub fn masks(&self) -> &[Tensor] {
        &self.masks
    }
}

fn check_keep_prob(keep_prob: f64) -> Result<()> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(invalid("keep_prob", format!("must lie in (0, 1], got {keep_prob}")));
    }
    Ok(())
}

/// Standard-normal pre-activation noise for the local reparameterization trick, one
/// `(batch, fan_out)` tensor per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalNoise {
    eps: Vec<Tensor>,
}

impl LocalNoise {
    pub fn sample<R: Rng + ?Sized>(spec: &MlpSpec, batch: usize, rng: &mut R) -> Result<Self> {
        let eps = spec.widths()[1..]
            .iter()
            .map(|&w| Tensor::matrix(batch, w, standard_normal_vec(rng, batch * w)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { eps })
    }

    pub fn layers(&self) -> &[Tensor] {
        &self.eps
    }
}

fn check_input(spec: &MlpSpec, x: &Tensor) -> Result<()> {
    if x.shape().len() != 2 || x.shape()[1] != spec.input_dim() {
        return Err(Error::Shape {
            op: "mlp_forward",
            detail: format!("batch shape {:?} does not match input width {}", x.shape(), spec.input_dim()),
        });
    }
    Ok(())
}

fn check_layout(spec: &MlpSpec, params: &FlatParams) -> Result<()> {
    if params.layout() != &spec.layout() {
        return Err(Error::Layout { expected: spec.num_params(), actual: params.len() });
    }
    Ok(())
}

fn activate(tape: &mut Tape, node: NodeId, act: Activation) -> Result<NodeId> {
    match act {
        Activation::Relu => tape.relu(node),
        Activation::Tanh => tape.tanh(node),
    }
}

/// Records the network on `tape`; `layers` holds `(weight, bias)` nodes per layer.
fn record_mlp(
    spec: &MlpSpec,
    tape: &mut Tape,
    layers: &[(NodeId, NodeId)],
    x: NodeId,
    masks: Option<&DropoutMasks>,
) -> Result<NodeId> {
    let mut h = x;
    let last = layers.len() - 1;
    for (l, &(w, b)) in layers.iter().enumerate() {
        let z = tape.matmul(h, w)?;
        h = tape.add_bias(z, b)?;
        if l < last {
            h = activate(tape, h, spec.activations()[l])?;
            if let Some(m) = masks {
                let mask = tape.constant(m.masks[l].clone());
                h = tape.mul(h, mask)?;
            }
        }
    }
    Ok(h)
}

fn leaf_layers(tape: &mut Tape, params: &FlatParams, differentiable: bool) -> Vec<(NodeId, NodeId)> {
    (0..params.layout().num_layers())
        .map(|l| {
            let (w, b) = (params.weight(l), params.bias(l));
            if differentiable {
                (tape.param(w), tape.param(b))
            } else {
                (tape.constant(w), tape.constant(b))
            }
        })
        .collect()
}

fn gather(grads: &crate::diffcore::Gradients, layers: &[(NodeId, NodeId)], total: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(total);
    for &(w, b) in layers {
        out.extend(grads.get_or_zeros(w));
        out.extend(grads.get_or_zeros(b));
    }
    out
}

/// Raw logits `(batch, output_width)`.
pub fn mlp_forward(spec: &MlpSpec, params: &FlatParams, x: &Tensor) -> Result<Tensor> {
    forward_with_masks(spec, params, x, None)
}

fn forward_with_masks(spec: &MlpSpec, params: &FlatParams, x: &Tensor, masks: Option<&DropoutMasks>) -> Result<Tensor> {
    check_layout(spec, params)?;
    check_input(spec, x)?;
    let mut tape = Tape::new();
    let layers = leaf_layers(&mut tape, params, false);
    let xn = tape.constant(x.clone());
    let out = record_mlp(spec, &mut tape, &layers, xn, masks)?;
    Ok(tape.value(out).clone())
}

/// Mean cross-entropy of the network on `(x, labels)`.
pub fn mlp_loss(spec: &MlpSpec, params: &FlatParams, x: &Tensor, labels: &[usize]) -> Result<f64> {
    check_layout(spec, params)?;
    check_input(spec, x)?;
    let mut tape = Tape::new();
    let layers = leaf_layers(&mut tape, params, false);
    let xn = tape.constant(x.clone());
    let logits = record_mlp(spec, &mut tape, &layers, xn, None)?;
    let loss = tape.softmax_cross_entropy(logits, labels)?;
    Ok(tape.value(loss).data()[0])
}

/// Mean cross-entropy and its gradient in flat-parameter order. With `masks`, the loss is
/// that of the dropout network under those fixed masks.
pub fn mlp_loss_grad(
    spec: &MlpSpec,
    params: &FlatParams,
    x: &Tensor,
    labels: &[usize],
    masks: Option<&DropoutMasks>,
) -> Result<(f64, Vec<f64>)> {
    check_layout(spec, params)?;
    check_input(spec, x)?;
    if let Some(m) = masks {
        check_masks(spec, m, x.rows())?;
    }
    let mut tape = Tape::new();
    let layers = leaf_layers(&mut tape, params, true);
    let xn = tape.constant(x.clone());
    let logits = record_mlp(spec, &mut tape, &layers, xn, masks)?;
    let loss = tape.softmax_cross_entropy(logits, labels)?;
    let grads = tape.backward(loss)?;
    Ok((tape.value(loss).data()[0], gather(&grads, &layers, params.len())))
}

fn check_masks(spec: &MlpSpec, masks: &DropoutMasks, batch: usize) -> Result<()> {
    let ok = masks.masks.len() == spec.hidden_widths().len()
        && masks.masks.iter().zip(spec.hidden_widths()).all(|(m, &w)| m.shape() == [batch, w]);
    if !ok {
        return Err(Error::Shape {
            op: "dropout",
            detail: "masks do not match the network's hidden layers and batch size".into(),
        });
    }
    Ok(())
}

/// Inverted-dropout forward pass with freshly drawn masks.
pub fn dropout_forward<R: Rng + ?Sized>(
    spec: &MlpSpec,
    params: &FlatParams,
    x: &Tensor,
    keep_prob: f64,
    rng: &mut R,
) -> Result<Tensor> {
    check_keep_prob(keep_prob)?;
    if keep_prob == 1.0 {
        return mlp_forward(spec, params, x);
    }
    check_input(spec, x)?;
    let masks = DropoutMasks::sample(spec, x.rows(), keep_prob, rng)?;
    forward_with_masks(spec, params, x, Some(&masks))
}

/// Local-reparameterization layers: each pre-activation is drawn from
/// `N(x·μ_W + μ_b, (x∘x)·σ_W² + σ_b²)` using the fixed noise in `noise`.
fn record_lrt(
    spec: &MlpSpec,
    tape: &mut Tape,
    mu: &[(NodeId, NodeId)],
    log_sigma: &[(NodeId, NodeId)],
    x: NodeId,
    noise: &LocalNoise,
) -> Result<NodeId> {
    let mut h = x;
    let last = mu.len() - 1;
    for l in 0..mu.len() {
        let (mw, mb) = mu[l];
        let (sw, sb) = log_sigma[l];
        let mean = tape.matmul(h, mw)?;
        let mean = tape.add_bias(mean, mb)?;
        let hsq = tape.mul(h, h)?;
        let two_sw = tape.scale(sw, 2.0)?;
        let var_w = tape.exp(two_sw)?;
        let two_sb = tape.scale(sb, 2.0)?;
        let var_b = tape.exp(two_sb)?;
        let var = tape.matmul(hsq, var_w)?;
        let var = tape.add_bias(var, var_b)?;
        let sd = tape.sqrt(var)?;
        let eps = tape.constant(noise.eps[l].clone());
        let jitter = tape.mul(sd, eps)?;
        h = tape.add(mean, jitter)?;
        if l < last {
            h = activate(tape, h, spec.activations()[l])?;
        }
    }
    Ok(h)
}

fn check_noise(spec: &MlpSpec, noise: &LocalNoise, batch: usize) -> Result<()> {
    let ok = noise.eps.len() == spec.num_layers()
        && noise.eps.iter().zip(&spec.widths()[1..]).all(|(e, &w)| e.shape() == [batch, w]);
    if !ok {
        return Err(Error::Shape {
            op: "local_reparam_forward",
            detail: "noise does not match the network's layers and batch size".into(),
        });
    }
    Ok(())
}

fn log_sigma_params(posterior: &GaussianPosterior) -> FlatParams {
    posterior.mu().with_values(posterior.log_sigma().to_vec()).expect("posterior vectors share a layout")
}

/// Logits under the local reparameterization trick with freshly drawn noise.
pub fn local_reparam_forward<R: Rng + ?Sized>(
    posterior: &GaussianPosterior,
    spec: &MlpSpec,
    x: &Tensor,
    rng: &mut R,
) -> Result<Tensor> {
    check_layout(spec, posterior.mu())?;
    check_input(spec, x)?;
    let noise = LocalNoise::sample(spec, x.rows(), rng)?;
    let mut tape = Tape::new();
    let mu = leaf_layers(&mut tape, posterior.mu(), false);
    let ls = leaf_layers(&mut tape, &log_sigma_params(posterior), false);
    let xn = tape.constant(x.clone());
    let out = record_lrt(spec, &mut tape, &mu, &ls, xn, &noise)?;
    Ok(tape.value(out).clone())
}

/// Mean cross-entropy under local reparameterization with fixed `noise`, and its gradients
/// w.r.t. the posterior mean and log-scale. `mu` overrides the posterior mean, which is how
/// the sharpness-aware step evaluates the perturbed mean under the same noise.
pub fn lrt_loss_grad(
    posterior: &GaussianPosterior,
    mu: &[f64],
    spec: &MlpSpec,
    x: &Tensor,
    labels: &[usize],
    noise: &LocalNoise,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_layout(spec, posterior.mu())?;
    check_input(spec, x)?;
    check_noise(spec, noise, x.rows())?;
    let mu = posterior.mu().with_values(mu.to_vec())?;
    let mut tape = Tape::new();
    let mu_nodes = leaf_layers(&mut tape, &mu, true);
    let ls_nodes = leaf_layers(&mut tape, &log_sigma_params(posterior), true);
    let xn = tape.constant(x.clone());
    let logits = record_lrt(spec, &mut tape, &mu_nodes, &ls_nodes, xn, noise)?;
    let loss = tape.softmax_cross_entropy(logits, labels)?;
    let grads = tape.backward(loss)?;
    Ok((tape.value(loss).data()[0], gather(&grads, &mu_nodes, mu.len()), gather(&grads, &ls_nodes, mu.len())))
}

/// Row-wise softmax of a `(batch, classes)` logit matrix.
pub fn softmax_rows(logits: &Tensor) -> Tensor {
    let c = logits.cols();
    let mut out = Vec::with_capacity(logits.len());
    for r in 0..logits.rows() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&z| (z - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / sum));
    }
    Tensor::matrix(logits.rows(), c, out).expect("same shape as logits")
}
