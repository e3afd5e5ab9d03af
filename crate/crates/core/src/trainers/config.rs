use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::flatness::GeometryKind;
use crate::models::LOG_SIGMA_MIN;

/// Inference method. Each has a baseline and a flat (sharpness-aware) variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Sgvb,
    SgvbLrt,
    Sgld,
    Swag,
    SwagDiag,
    McDropout,
    DeepEnsemble,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Sgvb,
        Method::SgvbLrt,
        Method::Sgld,
        Method::Swag,
        Method::SwagDiag,
        Method::McDropout,
        Method::DeepEnsemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sgvb => "sgvb",
            Method::SgvbLrt => "sgvb-lrt",
            Method::Sgld => "sgld",
            Method::Swag => "swag",
            Method::SwagDiag => "swag-diag",
            Method::McDropout => "mc-dropout",
            Method::DeepEnsemble => "deep-ensemble",
        }
    }

    /// Methods that learn a per-parameter σ, the only ones where `|μ|/σ` geometry exists.
    pub fn is_variational(self) -> bool {
        matches!(self, Method::Sgvb | Method::SgvbLrt)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid("method", format!("unknown method {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LrSchedule {
    #[default]
    Constant,
    Cosine,
}

impl FromStr for LrSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(LrSchedule::Constant),
            "cosine" => Ok(LrSchedule::Cosine),
            _ => Err(invalid("lr_schedule", format!("unknown schedule {s:?}"))),
        }
    }
}

impl fmt::Display for LrSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LrSchedule::Constant => "constant",
            LrSchedule::Cosine => "cosine",
        })
    }
}

/// Everything that determines a training run besides the architecture and the data.
///
/// Optional fields resolve against the training-set size `n`: `lambda` defaults to `n`,
/// `sgld_temperature` to `1/n`, and `swag_start_epoch` to 161/300 of `epochs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub method: Method,
    pub flat: bool,
    pub geometry: GeometryKind,
    pub rho: f64,
    pub lambda: Option<f64>,
    pub learning_rate: f64,
    pub lr_schedule: LrSchedule,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub prior_tau: f64,
    pub log_sigma_init: f64,
    pub mc_train_samples: usize,
    pub sgld_temperature: Option<f64>,
    pub swag_start_epoch: Option<usize>,
    pub swag_rank: usize,
    pub ensemble_size: usize,
    pub keep_prob: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            method: Method::Sgvb,
            flat: false,
            geometry: GeometryKind::Identity,
            rho: 0.05,
            lambda: None,
            learning_rate: 0.05,
            lr_schedule: LrSchedule::Constant,
            epochs: 200,
            batch_size: 32,
            seed: 0,
            prior_tau: 1.0,
            log_sigma_init: -5.0,
            mc_train_samples: 1,
            sgld_temperature: None,
            swag_start_epoch: None,
            swag_rank: 20,
            ensemble_size: 5,
            keep_prob: 0.9,
        }
    }
}

impl TrainConfig {
    pub fn for_method(method: Method) -> Self {
        Self { method, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(invalid("rho", format!("must be finite and nonnegative, got {}", self.rho)));
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(invalid("lambda", format!("must be finite and nonnegative, got {l}")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning_rate", format!("must be positive, got {}", self.learning_rate)));
        }
        if self.epochs == 0 {
            return Err(invalid("epochs", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size", "must be positive"));
        }
        if !(self.prior_tau > 0.0) {
            return Err(invalid("prior_tau", format!("must be positive, got {}", self.prior_tau)));
        }
        if self.method.is_variational() && !self.prior_tau.is_finite() {
            return Err(invalid("prior_tau", "variational methods need a finite prior scale"));
        }
        if !(self.log_sigma_init >= LOG_SIGMA_MIN && self.log_sigma_init.is_finite()) {
            return Err(invalid("log_sigma_init", format!("out of range: {}", self.log_sigma_init)));
        }
        if self.mc_train_samples == 0 {
            return Err(invalid("mc_train_samples", "must be positive"));
        }
        if let Some(t) = self.sgld_temperature {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(invalid("sgld_temperature", format!("must be nonnegative, got {t}")));
            }
        }
        if let Some(s) = self.swag_start_epoch {
            if s >= self.epochs {
                return Err(invalid("swag_start_epoch", format!("{s} is not before the final epoch {}", self.epochs)));
            }
        }
        if self.ensemble_size == 0 {
            return Err(invalid("ensemble_size", "must be positive"));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(invalid("keep_prob", format!("must lie in (0, 1], got {}", self.keep_prob)));
        }
        if self.geometry == GeometryKind::MuOverSigma && !self.method.is_variational() {
            return Err(Error::Unsupported(format!(
                "geometry mu-over-sigma needs a learned σ; method {} has none",
                self.method
            )));
        }
        Ok(())
    }

    pub fn lambda_for(&self, n: usize) -> f64 {
        self.lambda.unwrap_or(n as f64)
    }

    pub fn temperature_for(&self, n: usize) -> f64 {
        self.sgld_temperature.unwrap_or(1.0 / n as f64)
    }

    pub fn swag_start(&self) -> usize {
        self.swag_start_epoch.unwrap_or(((self.epochs * 161) as f64 / 300.0).round() as usize).min(self.epochs - 1)
    }

    /// Learning rate at `step` of `total_steps`.
    pub fn lr_at(&self, step: usize, total_steps: usize) -> f64 {
        match self.lr_schedule {
            LrSchedule::Constant => self.learning_rate,
            LrSchedule::Cosine => {
                let frac = step as f64 / total_steps.max(1) as f64;
                0.5 * self.learning_rate * (1.0 + (std::f64::consts::PI * frac).cos())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("sgd".parse::<Method>().is_err());
    }

    #[test]
    fn defaults_resolve_against_n() {
        let c = TrainConfig::default();
        assert_eq!(c.lambda_for(280), 280.0);
        assert_eq!(c.temperature_for(4), 0.25);
        assert_eq!(c.swag_start(), 107);
        let short = TrainConfig { epochs: 1, ..c };
        assert_eq!(short.swag_start(), 0);
    }

    #[test]
    fn cosine_decays_to_zero() {
        let c = TrainConfig { lr_schedule: LrSchedule::Cosine, learning_rate: 0.2, ..Default::default() };
        assert!((c.lr_at(0, 10) - 0.2).abs() < 1e-15);
        assert!((c.lr_at(5, 10) - 0.1).abs() < 1e-15);
        assert!(c.lr_at(10, 10).abs() < 1e-15);
    }

    #[test]
    fn geometry_needs_a_variational_method() {
        let c = TrainConfig { method: Method::Sgld, geometry: GeometryKind::MuOverSigma, ..Default::default() };
        assert!(matches!(c.validate(), Err(Error::Unsupported(_))));
        let ok = TrainConfig { method: Method::SgvbLrt, ..c };
        assert!(ok.validate().is_ok());
    }
}
