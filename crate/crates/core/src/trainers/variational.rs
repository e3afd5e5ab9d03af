use super::config::TrainConfig;
use super::step::{
    check_compatible, check_loss, check_params, objective_scale, sam_step, Evaluation, Minibatches, Trained,
};
use crate::data::Dataset;
use crate::error::Result;
use crate::flatness::geometry_diag;
use crate::models::{
    kl_diag_gaussian_grad, lrt_loss_grad, mlp_loss_grad, GaussianPosterior, LocalNoise, MlpSpec, PriorSpec,
};
use crate::rng::{standard_normal_vec, stream, Stream};

/// Variational inference on `λ E_ε[L_S(μ + σ⊙ε)] + KL(q ‖ p)` by SGD on `(μ, log σ)`.
///
/// In the flat variant the noise is drawn first and held fixed while `μ` alone is moved to
/// its SAM point; both gradients are then taken at `μ′ + σ⊙ε`, and the KL gradient at
/// `(μ, σ)`. With `local_reparam` the noise acts on pre-activations instead of weights.
pub fn train_sgvb(
    config: &TrainConfig,
    spec: &MlpSpec,
    dataset: &Dataset,
    local_reparam: bool,
) -> Result<Trained<GaussianPosterior>> {
    config.validate()?;
    check_compatible(spec, dataset)?;
    let n = dataset.len();
    let lambda = config.lambda_for(n);
    let scale = objective_scale(lambda);
    let prior = PriorSpec::new(config.prior_tau)?;
    let mu = spec.init_params(&mut stream(config.seed, Stream::Init));
    let mut posterior = GaussianPosterior::from_mean(mu, config.log_sigma_init);
    let mut batches = Minibatches::new(config.seed, n, config.batch_size);
    let mut noise_rng = stream(config.seed, Stream::Noise);
    let total = config.epochs * batches.per_epoch();
    let samples = config.mc_train_samples;
    let k = posterior.len();

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for _ in 0..config.epochs {
        let mut sum = 0.0;
        let epoch_batches = batches.epoch();
        for idx in &epoch_batches {
            let (x, y) = dataset.batch(idx)?;
            let sigma = posterior.sigma();
            let t_diag = geometry_diag(posterior.mu().values(), &sigma, config.geometry);
            let mut g_mu = vec![0.0; k];
            let mut g_ls = vec![0.0; k];
            let mut loss = 0.0;
            for _ in 0..samples {
                let eval = if local_reparam {
                    let noise = LocalNoise::sample(spec, idx.len(), &mut noise_rng)?;
                    sam_step(
                        |m| {
                            let (l, gm, gs) = lrt_loss_grad(&posterior, m, spec, &x, &y, &noise)?;
                            Ok(Evaluation { loss: check_loss(step, l)?, grad: gm, extra: gs })
                        },
                        posterior.mu().values(),
                        config.rho,
                        &t_diag,
                        config.flat,
                    )?
                } else {
                    let eps = standard_normal_vec(&mut noise_rng, k);
                    sam_step(
                        |m| {
                            let w = posterior.reparam_at(m, &eps);
                            let (l, g) = mlp_loss_grad(spec, &w, &x, &y, None)?;
                            let gs = g.iter().zip(&sigma).zip(&eps).map(|((g, s), e)| g * s * e).collect();
                            Ok(Evaluation { loss: check_loss(step, l)?, grad: g, extra: gs })
                        },
                        posterior.mu().values(),
                        config.rho,
                        &t_diag,
                        config.flat,
                    )?
                };
                loss += eval.loss / samples as f64;
                for (acc, g) in g_mu.iter_mut().zip(&eval.grad) {
                    *acc += g / samples as f64;
                }
                for (acc, g) in g_ls.iter_mut().zip(&eval.extra) {
                    *acc += g / samples as f64;
                }
            }
            let (kl_mu, kl_ls) = kl_diag_gaussian_grad(&posterior, &prior);
            for (g, kl) in g_mu.iter_mut().zip(&kl_mu) {
                *g = scale * (lambda * *g + kl);
            }
            for (g, kl) in g_ls.iter_mut().zip(&kl_ls) {
                *g = scale * (lambda * *g + kl);
            }
            posterior.apply_step(&g_mu, &g_ls, config.lr_at(step, total));
            check_params(step, posterior.mu().values())?;
            sum += loss;
            step += 1;
        }
        epoch_losses.push(sum / epoch_batches.len() as f64);
    }
    Ok(Trained { model: posterior, epoch_losses })
}
