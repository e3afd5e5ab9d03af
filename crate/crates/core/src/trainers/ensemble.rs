use super::config::TrainConfig;
use super::sgd::{run_sgd, Plain};
use super::step::{check_compatible, Trained};
use crate::data::Dataset;
use crate::error::Result;
use crate::models::{FlatParams, MlpSpec, PriorSpec};

/// `K` independent (flat-)SGD runs on `L_S + ‖θ‖²/(2τ²λ)`; member `k` uses seed `seed + k`.
/// Epoch losses are averaged over members.
pub fn train_deep_ensemble(
    config: &TrainConfig,
    spec: &MlpSpec,
    dataset: &Dataset,
) -> Result<Trained<Vec<FlatParams>>> {
    config.validate()?;
    check_compatible(spec, dataset)?;
    let prior = PriorSpec::new(config.prior_tau)?;
    let mut members = Vec::with_capacity(config.ensemble_size);
    let mut epoch_losses = vec![0.0; config.epochs];
    for k in 0..config.ensemble_size {
        let seed = config.seed.wrapping_add(k as u64);
        let (params, losses) = run_sgd(config, spec, dataset, seed, prior.precision(), &mut Plain)?;
        for (acc, l) in epoch_losses.iter_mut().zip(losses) {
            *acc += l / config.ensemble_size as f64;
        }
        members.push(params);
    }
    Ok(Trained { model: members, epoch_losses })
}
