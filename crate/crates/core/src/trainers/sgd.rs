//! Point-estimate (flat-)SGD driver shared by SGLD, SWAG, MC dropout and deep ensembles.

use super::config::TrainConfig;
use super::step::{check_loss, check_params, objective_scale, sam_step, Evaluation, Minibatches};
use crate::data::Dataset;
use crate::error::Result;
use crate::models::{mlp_loss_grad, DropoutMasks, FlatParams, MlpSpec};
use crate::rng::{stream, Stream};

/// Method-specific behaviour around the common update
/// `θ ← θ − lr · s · (λ ∇L_S(θ*) + c θ)`, where `θ*` is the SAM point and `s` the
/// objective scale.
pub(crate) trait SgdHooks {
    /// Dropout masks to hold fixed for this step's evaluations.
    fn masks(&mut self, _spec: &MlpSpec, _batch: usize) -> Result<Option<DropoutMasks>> {
        Ok(None)
    }

    fn after_update(&mut self, _theta: &mut [f64], _lr: f64) {}

    fn end_of_epoch(&mut self, _epoch: usize, _step: usize, _theta: &FlatParams) -> Result<()> {
        Ok(())
    }
}

pub(crate) struct Plain;

impl SgdHooks for Plain {}

/// Runs `config.epochs` epochs from the initialisation drawn for `seed`; `l2` is the
/// coefficient `c` of the `½ c ‖θ‖²` regulariser before scaling.
pub(crate) fn run_sgd<H: SgdHooks>(
    config: &TrainConfig,
    spec: &MlpSpec,
    dataset: &Dataset,
    seed: u64,
    l2: f64,
    hooks: &mut H,
) -> Result<(FlatParams, Vec<f64>)> {
    let n = dataset.len();
    let lambda = config.lambda_for(n);
    let scale = objective_scale(lambda);
    let mut theta = spec.init_params(&mut stream(seed, Stream::Init));
    let mut batches = Minibatches::new(seed, n, config.batch_size);
    let total = config.epochs * batches.per_epoch();
    let t_diag = vec![1.0; theta.len()];
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for epoch in 0..config.epochs {
        let mut sum = 0.0;
        let epoch_batches = batches.epoch();
        for idx in &epoch_batches {
            let (x, y) = dataset.batch(idx)?;
            let masks = hooks.masks(spec, idx.len())?;
            let eval = sam_step(
                |point| {
                    let params = theta.with_values(point.to_vec())?;
                    let (loss, grad) = mlp_loss_grad(spec, &params, &x, &y, masks.as_ref())?;
                    Ok(Evaluation { loss: check_loss(step, loss)?, grad, extra: () })
                },
                theta.values(),
                config.rho,
                &t_diag,
                config.flat,
            )?;
            let lr = config.lr_at(step, total);
            for (t, g) in theta.values_mut().iter_mut().zip(&eval.grad) {
                *t -= lr * (scale * (lambda * g + l2 * *t));
            }
            hooks.after_update(theta.values_mut(), lr);
            check_params(step, theta.values())?;
            sum += eval.loss;
            step += 1;
        }
        epoch_losses.push(sum / epoch_batches.len() as f64);
        hooks.end_of_epoch(epoch, step, &theta)?;
    }
    Ok((theta, epoch_losses))
}
