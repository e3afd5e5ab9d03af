use serde::{Deserialize, Serialize};

use super::eigen::{top_eigenvalues, EigenEstimate};
use super::metrics::{accuracy, ece, nll, ReliabilityTable};
use super::predict::{ensemble_predict, sampled_sharpness};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{mlp_loss_grad, FlatParams, MlpSpec};
use crate::rng::{stream, Stream};
use crate::trainers::Artifact;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessOptions {
    pub rho: f64,
    pub samples: usize,
    pub ascent_steps: usize,
}

impl Default for SharpnessOptions {
    fn default() -> Self {
        Self { rho: 0.05, samples: 5, ascent_steps: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub k: usize,
    pub iters: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { k: 5, iters: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub n_samples: usize,
    pub ece_bins: usize,
    pub seed: u64,
    pub sharpness: Option<SharpnessOptions>,
    pub eigen: Option<EigenOptions>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { n_samples: 30, ece_bins: 20, seed: 0, sharpness: None, eigen: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub nll: f64,
    pub ece: f64,
    pub reliability: ReliabilityTable,
    pub n_ensemble_samples: usize,
    /// Mean over the sampled models in `sharpness_samples`.
    pub sharpness: Option<f64>,
    pub sharpness_samples: Option<Vec<f64>>,
    pub eigenvalues: Option<EigenEstimate>,
}

/// The point or points whose loss curvature summarises a posterior; ensembles contribute
/// every member.
pub fn reference_params(artifact: &Artifact) -> Vec<FlatParams> {
    match artifact {
        Artifact::Gaussian { posterior, .. } => vec![posterior.mu().clone()],
        Artifact::Swag { stats, .. } => vec![stats.mean_params()],
        Artifact::Particles { set } => set.particles().last().map(|p| p.params.clone()).into_iter().collect(),
        Artifact::Dropout { params, .. } => vec![params.clone()],
        Artifact::Ensemble { members } => members.clone(),
    }
}

/// Hessian spectrum of the mean loss on `dataset`, averaged over [`reference_params`].
pub fn reference_spectrum(
    artifact: &Artifact,
    spec: &MlpSpec,
    dataset: &Dataset,
    options: &EigenOptions,
    seed: u64,
) -> Result<EigenEstimate> {
    let mut rng = stream(seed, Stream::Spectrum);
    let points = reference_params(artifact);
    let mut values = vec![0.0; options.k];
    for p in &points {
        let est = top_eigenvalues(
            |theta| {
                let q = p.with_values(theta.to_vec())?;
                Ok(mlp_loss_grad(spec, &q, dataset.features(), dataset.labels(), None)?.1)
            },
            p.values(),
            options.k,
            options.iters,
            &mut rng,
        )?;
        values.iter_mut().zip(&est.values).for_each(|(v, e)| *v += e / points.len() as f64);
    }
    let ratio = values[0] / values[options.k - 1];
    Ok(EigenEstimate { values, ratio })
}

pub fn evaluate(artifact: &Artifact, spec: &MlpSpec, dataset: &Dataset, options: &EvalOptions) -> Result<EvalReport> {
    if dataset.dim() != spec.input_dim() || dataset.num_classes() != spec.output_dim() {
        return Err(Error::Shape {
            op: "evaluate",
            detail: format!(
                "network maps {} → {} but data has {} features and {} classes",
                spec.input_dim(),
                spec.output_dim(),
                dataset.dim(),
                dataset.num_classes()
            ),
        });
    }
    let mut rng = stream(options.seed, Stream::Eval);
    let probs = ensemble_predict(artifact, spec, dataset.features(), options.n_samples, &mut rng)?;
    let labels = dataset.labels();
    let (ece_value, reliability) = ece(&probs, labels, options.ece_bins)?;
    let sharpness_samples = match &options.sharpness {
        Some(s) => Some(sampled_sharpness(
            artifact,
            spec,
            dataset,
            s.rho,
            s.samples,
            s.ascent_steps,
            &mut stream(options.seed, Stream::Sharpness),
        )?),
        None => None,
    };
    let eigenvalues = match &options.eigen {
        Some(e) => Some(reference_spectrum(artifact, spec, dataset, e, options.seed)?),
        None => None,
    };
    Ok(EvalReport {
        accuracy: accuracy(&probs, labels)?,
        nll: nll(&probs, labels)?,
        ece: ece_value,
        reliability,
        n_ensemble_samples: options.n_samples,
        sharpness: sharpness_samples.as_ref().map(|v| v.iter().sum::<f64>() / v.len() as f64),
        sharpness_samples,
        eigenvalues,
    })
}
