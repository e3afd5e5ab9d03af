use super::config::TrainConfig;
use super::sgd::{run_sgd, SgdHooks};
use super::step::{check_compatible, Trained};
use crate::data::Dataset;
use crate::error::Result;
use crate::models::{DropoutMasks, FlatParams, MlpSpec, PriorSpec};
use crate::rng::{stream, SeededRng, Stream};

struct Masks {
    rng: SeededRng,
    keep_prob: f64,
}

impl SgdHooks for Masks {
    fn masks(&mut self, spec: &MlpSpec, batch: usize) -> Result<Option<DropoutMasks>> {
        if self.keep_prob >= 1.0 {
            return Ok(None);
        }
        DropoutMasks::sample(spec, batch, self.keep_prob, &mut self.rng).map(Some)
    }
}

/// (Flat-)SGD on the dropout loss plus the `keep_prob·‖θ‖²/(2τ²λ)` weight penalty. One mask
/// set is drawn per step and kept for both evaluations of a flat step.
pub fn train_mc_dropout(config: &TrainConfig, spec: &MlpSpec, dataset: &Dataset) -> Result<Trained<FlatParams>> {
    config.validate()?;
    check_compatible(spec, dataset)?;
    let mut hooks = Masks { rng: stream(config.seed, Stream::Noise), keep_prob: config.keep_prob };
    let prior = PriorSpec::new(config.prior_tau)?;
    let l2 = config.keep_prob * prior.precision();
    let (model, epoch_losses) = run_sgd(config, spec, dataset, config.seed, l2, &mut hooks)?;
    Ok(Trained { model, epoch_losses })
}
