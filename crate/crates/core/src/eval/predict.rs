use rand::Rng;

use crate::data::Dataset;
use crate::diffcore::Tensor;
use crate::error::{invalid, Result};
use crate::flatness::sharpness;
use crate::models::{
    dropout_forward, local_reparam_forward, mlp_forward, mlp_loss_grad, sample_weights_reparam, softmax_rows,
    DropoutMasks, FlatParams, MlpSpec,
};
use crate::trainers::{swag_sample, Artifact};

/// One network drawn from a posterior. Dropout draws carry their masks, sized for the rows
/// they were sampled for.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledModel {
    pub params: FlatParams,
    pub masks: Option<DropoutMasks>,
}

/// All members when there are at most `n`, otherwise `n` distinct ones in index order.
fn member_indices<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Vec<usize> {
    if len <= n {
        return (0..len).collect();
    }
    let mut picked = rand::seq::index::sample(rng, len, n).into_vec();
    picked.sort_unstable();
    picked
}

fn check_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n_samples", "need at least one sample"));
    }
    Ok(())
}

/// Draws up to `n` networks. Finite members (particles, ensemble members) are enumerated
/// rather than resampled, so fewer than `n` may come back.
pub fn sample_models<R: Rng + ?Sized>(
    artifact: &Artifact,
    spec: &MlpSpec,
    n: usize,
    mask_rows: usize,
    rng: &mut R,
) -> Result<Vec<SampledModel>> {
    check_samples(n)?;
    let plain = |params: FlatParams| SampledModel { params, masks: None };
    Ok(match artifact {
        Artifact::Gaussian { posterior, .. } => {
            (0..n).map(|_| plain(sample_weights_reparam(posterior, rng).0)).collect()
        }
        Artifact::Swag { stats, diag_only } => {
            (0..n).map(|_| swag_sample(stats, rng, *diag_only).map(plain)).collect::<Result<_>>()?
        }
        Artifact::Particles { set } => {
            member_indices(set.len(), n, rng).into_iter().map(|i| plain(set.particles()[i].params.clone())).collect()
        }
        Artifact::Dropout { params, keep_prob } => (0..n)
            .map(|_| {
                let masks =
                    if *keep_prob < 1.0 { Some(DropoutMasks::sample(spec, mask_rows, *keep_prob, rng)?) } else { None };
                Ok(SampledModel { params: params.clone(), masks })
            })
            .collect::<Result<_>>()?,
        Artifact::Ensemble { members } => {
            member_indices(members.len(), n, rng).into_iter().map(|i| plain(members[i].clone())).collect()
        }
    })
}

/// Posterior-predictive probabilities: the mean of per-model softmax outputs, accumulated
/// in sample order.
pub fn ensemble_predict<R: Rng + ?Sized>(
    artifact: &Artifact,
    spec: &MlpSpec,
    x: &Tensor,
    n_samples: usize,
    rng: &mut R,
) -> Result<Tensor> {
    check_samples(n_samples)?;
    let mut logits = Vec::new();
    match artifact {
        Artifact::Gaussian { posterior, local_reparam: true } => {
            for _ in 0..n_samples {
                logits.push(local_reparam_forward(posterior, spec, x, rng)?);
            }
        }
        Artifact::Dropout { params, keep_prob } => {
            for _ in 0..n_samples {
                logits.push(dropout_forward(spec, params, x, *keep_prob, rng)?);
            }
        }
        _ => {
            for model in sample_models(artifact, spec, n_samples, x.rows(), rng)? {
                logits.push(mlp_forward(spec, &model.params, x)?);
            }
        }
    }
    let count = logits.len() as f64;
    let mut mean = Tensor::zeros(vec![x.rows(), spec.output_dim()]);
    for l in &logits {
        let p = softmax_rows(l);
        mean.data_mut().iter_mut().zip(p.data()).for_each(|(m, v)| *m += v);
    }
    mean.data_mut().iter_mut().for_each(|m| *m /= count);
    Ok(mean)
}

/// Sharpness of each of up to `samples` sampled networks on the full dataset.
pub fn sampled_sharpness<R: Rng + ?Sized>(
    artifact: &Artifact,
    spec: &MlpSpec,
    dataset: &Dataset,
    rho: f64,
    samples: usize,
    ascent_steps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let x = dataset.features();
    let y = dataset.labels();
    sample_models(artifact, spec, samples, dataset.len(), rng)?
        .into_iter()
        .map(|model| {
            sharpness(
                |theta| {
                    let p = model.params.with_values(theta.to_vec())?;
                    mlp_loss_grad(spec, &p, x, y, model.masks.as_ref())
                },
                model.params.values(),
                rho,
                ascent_steps,
            )
        })
        .collect()
}
