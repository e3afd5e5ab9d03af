use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::sgd::{run_sgd, SgdHooks};
use super::step::{check_compatible, Trained};
use crate::data::Dataset;
use crate::error::{invalid, Result};
use crate::models::{FlatParams, MlpSpec, PriorSpec};
use crate::rng::{standard_normal_vec, stream, SeededRng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    /// Number of updates taken when the snapshot was recorded.
    pub step: usize,
    pub params: FlatParams,
}

/// Snapshots of a sampler trajectory, ordered by step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

impl ParticleSet {
    pub fn new(particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(invalid("particles", "a particle set cannot be empty"));
        }
        if particles.windows(2).any(|w| w[1].step <= w[0].step) {
            return Err(invalid("particles", "particles must be strictly ordered by step"));
        }
        Ok(Self { particles })
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }
}

/// Langevin update `θ ← θ − lr·g + √(2·lr·temperature)·z`.
pub fn sgld_update(theta: &mut [f64], grad: &[f64], lr: f64, temperature: f64, z: &[f64]) {
    let noise_scale = (2.0 * lr * temperature).sqrt();
    for ((t, g), zi) in theta.iter_mut().zip(grad).zip(z) {
        *t -= lr * g;
        *t += noise_scale * zi;
    }
}

struct Langevin {
    rng: SeededRng,
    temperature: f64,
    burn_in: usize,
    particles: Vec<Particle>,
}

impl SgdHooks for Langevin {
    fn after_update(&mut self, theta: &mut [f64], lr: f64) {
        let z = standard_normal_vec(&mut self.rng, theta.len());
        let noise_scale = (2.0 * lr * self.temperature).sqrt();
        for (t, zi) in theta.iter_mut().zip(&z) {
            *t += noise_scale * zi;
        }
    }

    fn end_of_epoch(&mut self, epoch: usize, step: usize, theta: &FlatParams) -> Result<()> {
        if epoch >= self.burn_in {
            self.particles.push(Particle { step, params: theta.clone() });
        }
        Ok(())
    }
}

/// Stochastic-gradient Langevin dynamics on `L_S + ‖θ‖²/(2τ²λ)`. The first half of the
/// epochs is burn-in; afterwards one particle is kept per epoch.
pub fn train_sgld(config: &TrainConfig, spec: &MlpSpec, dataset: &Dataset) -> Result<Trained<ParticleSet>> {
    config.validate()?;
    check_compatible(spec, dataset)?;
    let mut hooks = Langevin {
        rng: stream(config.seed, Stream::Noise),
        temperature: config.temperature_for(dataset.len()),
        burn_in: config.epochs / 2,
        particles: Vec::new(),
    };
    let prior = PriorSpec::new(config.prior_tau)?;
    let (_, epoch_losses) = run_sgd(config, spec, dataset, config.seed, prior.precision(), &mut hooks)?;
    Ok(Trained { model: ParticleSet::new(hooks.particles)?, epoch_losses })
}
