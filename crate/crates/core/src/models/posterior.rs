use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::FlatParams;
use crate::error::{invalid, Error, Result};
use crate::rng::standard_normal_vec;

pub const LOG_SIGMA_MIN: f64 = -20.0;
pub const LOG_SIGMA_MAX: f64 = 3.0;

/// Fully factorised Gaussian `N(μ, diag σ²)` with `σ = exp(log_sigma)`.
///
/// `log_sigma` is kept inside `[LOG_SIGMA_MIN, LOG_SIGMA_MAX]`, so `σ` is always positive
/// and the geometry ratio `|μ|/σ` stays bounded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    mu: FlatParams,
    log_sigma: Vec<f64>,
}

impl GaussianPosterior {
    pub fn new(mu: FlatParams, mut log_sigma: Vec<f64>) -> Result<Self> {
        if log_sigma.len() != mu.len() {
            return Err(Error::Layout { expected: mu.len(), actual: log_sigma.len() });
        }
        clamp_log_sigma(&mut log_sigma);
        Ok(Self { mu, log_sigma })
    }

    /// Constant initial log-scale around the given means.
    pub fn from_mean(mu: FlatParams, log_sigma_init: f64) -> Self {
        let n = mu.len();
        Self::new(mu, vec![log_sigma_init; n]).expect("lengths match")
    }

    pub fn mu(&self) -> &FlatParams {
        &self.mu
    }

    pub fn log_sigma(&self) -> &[f64] {
        &self.log_sigma
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.log_sigma.iter().map(|s| s.exp()).collect()
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// In-place SGD step on `(μ, log σ)` followed by the log-scale clamp.
    pub(crate) fn apply_step(&mut self, grad_mu: &[f64], grad_log_sigma: &[f64], lr: f64) {
        for (m, g) in self.mu.values_mut().iter_mut().zip(grad_mu) {
            *m -= lr * g;
        }
        for (s, g) in self.log_sigma.iter_mut().zip(grad_log_sigma) {
            *s -= lr * g;
        }
        clamp_log_sigma(&mut self.log_sigma);
    }

    /// `μ + σ ⊙ ε` for an externally supplied mean (e.g. a SAM-perturbed one) and noise.
    pub fn reparam_at(&self, mu: &[f64], eps: &[f64]) -> FlatParams {
        let values = mu.iter().zip(&self.log_sigma).zip(eps).map(|((m, s), e)| m + s.exp() * e).collect();
        self.mu.with_values(values).expect("same layout")
    }
}

fn clamp_log_sigma(log_sigma: &mut [f64]) {
    for s in log_sigma {
        *s = s.clamp(LOG_SIGMA_MIN, LOG_SIGMA_MAX);
    }
}

/// Isotropic zero-mean Gaussian prior `N(0, τ² I)`.
///
/// `τ = ∞` is accepted and turns the prior's L2 pull off; it is rejected by the KL term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    tau: f64,
}

impl PriorSpec {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(invalid("prior_tau", format!("must be positive, got {tau}")));
        }
        Ok(Self { tau })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `1/τ²`, the L2 coefficient of `−log p(θ)`.
    pub fn precision(&self) -> f64 {
        1.0 / (self.tau * self.tau)
    }
}

impl Default for PriorSpec {
    fn default() -> Self {
        Self { tau: 1.0 }
    }
}

/// Reparameterised weight sample `μ + σ ⊙ ε`; `ε` is returned so callers can reuse it.
pub fn sample_weights_reparam<R: Rng + ?Sized>(posterior: &GaussianPosterior, rng: &mut R) -> (FlatParams, Vec<f64>) {
    let eps = standard_normal_vec(rng, posterior.len());
    (posterior.reparam_at(posterior.mu().values(), &eps), eps)
}

/// `KL(N(μ, diag σ²) ‖ N(0, τ² I)) = ½ Σ [(σ² + μ²)/τ² − 1 − 2 log(σ/τ)]`.
pub fn kl_diag_gaussian(posterior: &GaussianPosterior, prior: &PriorSpec) -> f64 {
    let tau2 = prior.tau * prior.tau;
    let log_tau = prior.tau.ln();
    posterior
        .mu
        .values()
        .iter()
        .zip(&posterior.log_sigma)
        .map(|(m, &ls)| {
            let s2 = (2.0 * ls).exp();
            0.5 * ((s2 + m * m) / tau2 - 1.0 - 2.0 * (ls - log_tau))
        })
        .sum()
}

/// Gradient of [`kl_diag_gaussian`] w.r.t. `(μ, log σ)`.
pub fn kl_diag_gaussian_grad(posterior: &GaussianPosterior, prior: &PriorSpec) -> (Vec<f64>, Vec<f64>) {
    let prec = prior.precision();
    let d_mu = posterior.mu.values().iter().map(|m| m * prec).collect();
    let d_ls = posterior.log_sigma.iter().map(|&ls| (2.0 * ls).exp() * prec - 1.0).collect();
    (d_mu, d_ls)
}
