use serde::{Deserialize, Serialize};

use super::config::{Method, TrainConfig};
use super::dropout::train_mc_dropout;
use super::ensemble::train_deep_ensemble;
use super::sgld::{train_sgld, ParticleSet};
use super::step::Trained;
use super::swag::{train_swag, SwagStats};
use super::variational::train_sgvb;
use crate::data::Dataset;
use crate::error::Result;
use crate::models::{FlatParams, GaussianPosterior};

/// Trained posterior of any method, in the form evaluation and checkpoints consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Artifact {
    Gaussian { posterior: GaussianPosterior, local_reparam: bool },
    Swag { stats: SwagStats, diag_only: bool },
    Particles { set: ParticleSet },
    Dropout { params: FlatParams, keep_prob: f64 },
    Ensemble { members: Vec<FlatParams> },
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Gaussian { .. } => "gaussian",
            Artifact::Swag { .. } => "swag",
            Artifact::Particles { .. } => "particles",
            Artifact::Dropout { .. } => "dropout",
            Artifact::Ensemble { .. } => "ensemble",
        }
    }

    /// Whether this payload is what `method` produces.
    pub fn matches(&self, method: Method) -> bool {
        match (self, method) {
            (Artifact::Gaussian { local_reparam, .. }, Method::Sgvb) => !local_reparam,
            (Artifact::Gaussian { local_reparam, .. }, Method::SgvbLrt) => *local_reparam,
            (Artifact::Swag { diag_only, .. }, Method::Swag) => !diag_only,
            (Artifact::Swag { diag_only, .. }, Method::SwagDiag) => *diag_only,
            (Artifact::Particles { .. }, Method::Sgld) => true,
            (Artifact::Dropout { .. }, Method::McDropout) => true,
            (Artifact::Ensemble { .. }, Method::DeepEnsemble) => true,
            _ => false,
        }
    }

    /// Every learned number, concatenated in a fixed order.
    pub fn flatten(&self) -> Vec<f64> {
        match self {
            Artifact::Gaussian { posterior, .. } => [posterior.mu().values(), posterior.log_sigma()].concat(),
            Artifact::Swag { stats, .. } => {
                let mut out = [stats.mean(), stats.sq_mean()].concat();
                stats.deviations().iter().for_each(|d| out.extend_from_slice(d));
                out
            }
            Artifact::Particles { set } => {
                set.particles().iter().flat_map(|p| p.params.values().iter().copied()).collect()
            }
            Artifact::Dropout { params, .. } => params.values().to_vec(),
            Artifact::Ensemble { members } => members.iter().flat_map(|m| m.values().iter().copied()).collect(),
        }
    }
}

/// Trains `config.method` and wraps the result.
pub fn train(config: &TrainConfig, spec: &crate::models::MlpSpec, dataset: &Dataset) -> Result<Trained<Artifact>> {
    fn wrap<T>(t: Trained<T>, f: impl FnOnce(T) -> Artifact) -> Trained<Artifact> {
        Trained { model: f(t.model), epoch_losses: t.epoch_losses }
    }
    Ok(match config.method {
        Method::Sgvb | Method::SgvbLrt => {
            let local_reparam = config.method == Method::SgvbLrt;
            wrap(train_sgvb(config, spec, dataset, local_reparam)?, |posterior| Artifact::Gaussian {
                posterior,
                local_reparam,
            })
        }
        Method::Swag | Method::SwagDiag => {
            let diag_only = config.method == Method::SwagDiag;
            wrap(train_swag(config, spec, dataset, diag_only)?, |stats| Artifact::Swag { stats, diag_only })
        }
        Method::Sgld => wrap(train_sgld(config, spec, dataset)?, |set| Artifact::Particles { set }),
        Method::McDropout => wrap(train_mc_dropout(config, spec, dataset)?, |params| Artifact::Dropout {
            params,
            keep_prob: config.keep_prob,
        }),
        Method::DeepEnsemble => {
            wrap(train_deep_ensemble(config, spec, dataset)?, |members| Artifact::Ensemble { members })
        }
    })
}
