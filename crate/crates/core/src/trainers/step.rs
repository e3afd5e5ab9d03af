use rand::seq::SliceRandom;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::flatness::sam_perturb;
use crate::models::MlpSpec;
use crate::rng::{stream, SeededRng, Stream};

/// Loss and gradient at one point, plus method-specific by-products (e.g. the log-scale
/// gradient of a variational step).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation<E = ()> {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub extra: E,
}

/// The shared sharpness-aware skeleton: evaluate at `current`, move to the SAM point and
/// evaluate again. Baseline steps (`flat == false`) and `rho == 0` evaluate once.
pub fn sam_step<E, F>(mut loss_at: F, current: &[f64], rho: f64, t_diag: &[f64], flat: bool) -> Result<Evaluation<E>>
where
    F: FnMut(&[f64]) -> Result<Evaluation<E>>,
{
    let base = loss_at(current)?;
    if !flat || rho == 0.0 {
        return Ok(base);
    }
    let perturbed = sam_perturb(current, &base.grad, rho, t_diag);
    loss_at(&perturbed)
}

/// Output of a trainer together with the mean training loss of each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Trained<T> {
    pub model: T,
    pub epoch_losses: Vec<f64>,
}

/// Scale applied to `λ L_S + regulariser` so that all methods share one learning-rate
/// range: `1/λ` for `λ ≥ 1`, and no rescaling below.
pub(crate) fn objective_scale(lambda: f64) -> f64 {
    1.0 / lambda.max(1.0)
}

pub(crate) fn check_loss(step: usize, loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::Diverged { step, loss })
    }
}

pub(crate) fn check_params(step: usize, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&v) => Err(Error::Diverged { step, loss: v }),
        None => Ok(()),
    }
}

pub(crate) fn check_compatible(spec: &MlpSpec, dataset: &Dataset) -> Result<()> {
    if spec.input_dim() != dataset.dim() || spec.output_dim() != dataset.num_classes() {
        return Err(Error::Shape {
            op: "train",
            detail: format!(
                "network maps {} → {} but data has {} features and {} classes",
                spec.input_dim(),
                spec.output_dim(),
                dataset.dim(),
                dataset.num_classes()
            ),
        });
    }
    Ok(())
}

/// Per-epoch shuffled minibatch indices; the final batch may be short.
pub(crate) struct Minibatches {
    rng: SeededRng,
    order: Vec<usize>,
    batch_size: usize,
}

impl Minibatches {
    pub(crate) fn new(seed: u64, n: usize, batch_size: usize) -> Self {
        Self { rng: stream(seed, Stream::Shuffle), order: (0..n).collect(), batch_size: batch_size.min(n) }
    }

    pub(crate) fn per_epoch(&self) -> usize {
        self.order.len().div_ceil(self.batch_size)
    }

    pub(crate) fn epoch(&mut self) -> Vec<Vec<usize>> {
        self.order.shuffle(&mut self.rng);
        self.order.chunks(self.batch_size).map(<[usize]>::to_vec).collect()
    }
}
