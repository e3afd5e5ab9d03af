use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::sgd::{run_sgd, SgdHooks};
use super::step::{check_compatible, Trained};
use crate::data::Dataset;
use crate::error::{invalid, Error, Result};
use crate::models::{FlatParams, Layout, MlpSpec, PriorSpec};
use crate::rng::standard_normal_vec;

/// Streaming first and second moments of an SGD trajectory, plus the most recent
/// deviations from the running mean for the low-rank covariance term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwagStats {
    layout: Layout,
    count: usize,
    mean: Vec<f64>,
    sq_mean: Vec<f64>,
    rank: usize,
    deviations: Vec<Vec<f64>>,
}

impl SwagStats {
    pub fn new(layout: Layout, rank: usize) -> Self {
        let k = layout.total();
        Self { layout, count: 0, mean: vec![0.0; k], sq_mean: vec![0.0; k], rank, deviations: Vec::new() }
    }

    pub fn collect(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.mean.len() {
            return Err(Error::Layout { expected: self.mean.len(), actual: theta.len() });
        }
        self.count += 1;
        let c = self.count as f64;
        for ((m, s), t) in self.mean.iter_mut().zip(&mut self.sq_mean).zip(theta) {
            *m += (t - *m) / c;
            *s += (t * t - *s) / c;
        }
        if self.rank > 0 {
            if self.deviations.len() == self.rank {
                self.deviations.remove(0);
            }
            self.deviations.push(theta.iter().zip(&self.mean).map(|(t, m)| t - m).collect());
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn sq_mean(&self) -> &[f64] {
        &self.sq_mean
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn deviations(&self) -> &[Vec<f64>] {
        &self.deviations
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// `max(E[θ²] − E[θ]², 0)` per coordinate.
    pub fn variance(&self) -> Vec<f64> {
        self.sq_mean.iter().zip(&self.mean).map(|(s, m)| (s - m * m).max(0.0)).collect()
    }

    pub fn mean_params(&self) -> FlatParams {
        FlatParams::new(self.mean.clone(), self.layout.clone()).expect("moments match the layout")
    }
}

/// Draws one network from the SWAG Gaussian. The full form mixes half the diagonal with
/// half the low-rank deviation covariance; with fewer than two stored deviations it falls
/// back to the diagonal.
pub fn swag_sample<R: Rng + ?Sized>(stats: &SwagStats, rng: &mut R, diag_only: bool) -> Result<FlatParams> {
    if stats.count < 2 {
        return Err(invalid("swag", format!("need at least 2 collected models, have {}", stats.count)));
    }
    let sd: Vec<f64> = stats.variance().into_iter().map(f64::sqrt).collect();
    let e1 = standard_normal_vec(rng, sd.len());
    let k = stats.deviations.len();
    let values = if diag_only || k < 2 {
        stats.mean.iter().zip(&sd).zip(&e1).map(|((m, s), e)| m + s * e).collect()
    } else {
        let e2 = standard_normal_vec(rng, k);
        let half = std::f64::consts::FRAC_1_SQRT_2;
        let low_rank = 1.0 / (2.0 * (k - 1) as f64).sqrt();
        (0..sd.len())
            .map(|j| {
                let d: f64 = stats.deviations.iter().zip(&e2).map(|(dev, e)| dev[j] * e).sum();
                stats.mean[j] + half * sd[j] * e1[j] + low_rank * d
            })
            .collect()
    };
    FlatParams::new(values, stats.layout.clone())
}

struct Collector {
    start: usize,
    stats: SwagStats,
}

impl SgdHooks for Collector {
    fn end_of_epoch(&mut self, epoch: usize, _step: usize, theta: &FlatParams) -> Result<()> {
        if epoch >= self.start {
            self.stats.collect(theta.values())?;
        }
        Ok(())
    }
}

/// (Flat-)SGD on `L_S + ‖θ‖²/(2τ²λ)`, snapshotting once per epoch from the collection epoch.
pub fn train_swag(
    config: &TrainConfig,
    spec: &MlpSpec,
    dataset: &Dataset,
    diag_only: bool,
) -> Result<Trained<SwagStats>> {
    config.validate()?;
    check_compatible(spec, dataset)?;
    let rank = if diag_only { 0 } else { config.swag_rank };
    let mut hooks = Collector { start: config.swag_start(), stats: SwagStats::new(spec.layout(), rank) };
    let prior = PriorSpec::new(config.prior_tau)?;
    let (_, epoch_losses) = run_sgd(config, spec, dataset, config.seed, prior.precision(), &mut hooks)?;
    if hooks.stats.count == 0 {
        return Err(invalid("swag", "no models were collected"));
    }
    Ok(Trained { model: hooks.stats, epoch_losses })
}
