//! Numeric evaluators for the flat-posterior PAC-Bayes bound: the covering number of the
//! parameter ball, the prior scale σ tied to ρ, and the residual complexity term.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `(2R√k/ε)^k`, carried in log space. `value` is `None` when the linear value overflows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    pub log_value: f64,
    pub value: Option<f64>,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and positive, got {v}")))
    }
}

pub fn covering_number_bound(r: f64, k: usize, eps: f64) -> Result<CoveringBound> {
    positive("R", r)?;
    positive("eps", eps)?;
    if k == 0 {
        return Err(invalid("k", "must be positive"));
    }
    let kf = k as f64;
    let scale = 2.0 * r / eps;
    let log_value = kf * scale.ln() + 0.5 * kf * kf.ln();
    // k^(k/2) kept as an integer power where possible so small cases come out exact
    let k_pow = match i32::try_from(k / 2) {
        Ok(half) if k.is_multiple_of(2) => kf.powi(half),
        Ok(half) => kf.powi(half) * kf.sqrt(),
        Err(_) => f64::INFINITY,
    };
    let linear = scale.powi(k.min(i32::MAX as usize) as i32) * k_pow;
    let value = linear.is_finite().then_some(linear);
    Ok(CoveringBound { log_value, value })
}

/// `ρ / (√k (1 + √(log(N²n)/k)))`.
pub fn sigma_from_rho(rho: f64, k: usize, covering: f64, n: usize) -> Result<f64> {
    positive("N", covering)?;
    if covering < 1.0 {
        return Err(invalid("N", format!("must be at least 1, got {covering}")));
    }
    sigma_from_rho_log(rho, k, covering.ln(), n)
}

/// [`sigma_from_rho`] with the covering number given as `log N`, for covering numbers that
/// overflow an `f64`.
pub fn sigma_from_rho_log(rho: f64, k: usize, log_covering: f64, n: usize) -> Result<f64> {
    positive("rho", rho)?;
    if k == 0 || n == 0 {
        return Err(invalid("k, n", "must be positive"));
    }
    if !(log_covering >= 0.0) {
        return Err(invalid("N", "log covering number must be nonnegative"));
    }
    let kf = k as f64;
    let log_term = 2.0 * log_covering + (n as f64).ln();
    Ok(rho / (kf.sqrt() * (1.0 + (log_term / kf).sqrt())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub k: usize,
    pub n: usize,
    pub r: f64,
    pub rho: f64,
    pub delta: f64,
    /// Additive stand-in for the modulus-of-continuity contribution; counted twice.
    #[serde(default)]
    pub omega: f64,
}

impl BoundInputs {
    pub fn new(k: usize, n: usize, r: f64, rho: f64, delta: f64) -> Self {
        Self { k, n, r, rho, delta, omega: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(invalid("k", "must be positive"));
        }
        if self.n < 2 {
            return Err(invalid("n", format!("must be at least 2, got {}", self.n)));
        }
        positive("R", self.r)?;
        positive("rho", self.rho)?;
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1], got {}", self.delta)));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(invalid("omega", "must be finite and nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerms {
    /// `log N(Θ, ε)` at `ε = n^{-1/(2k)}`.
    pub covering_log: f64,
    pub sigma: f64,
    pub inv_sqrt_n: f64,
    pub omega_term: f64,
    pub sqrt_term: f64,
    pub total: f64,
}

/// Every component of the bound's residual term.
pub fn pac_bayes_bound_terms(inputs: &BoundInputs) -> Result<BoundTerms> {
    inputs.validate()?;
    let k = inputs.k as f64;
    let n = inputs.n as f64;
    let (r, rho) = (inputs.r, inputs.rho);

    let eps = n.powf(-1.0 / (2.0 * k));
    let covering_log = covering_number_bound(r, inputs.k, eps)?.log_value;
    // a tiny ball can have covering number below one; the σ formula needs log N ≥ 0
    let sigma = sigma_from_rho_log(rho, inputs.k, covering_log.max(0.0), inputs.n)?;

    let inner = 1.0 + 2.0 * (2.0 * r * k.sqrt()).ln() + (2.0 / k) * n.ln();
    let log_arg = 1.0 + (2.0 * r * r / (rho * rho)) * inner;
    if !(log_arg > 0.0) {
        return Err(invalid("R", format!("log argument {log_arg} is not positive")));
    }
    let numerator = k * (1.0 + log_arg.ln()) + 2.0 * (n / inputs.delta).ln();
    if !(numerator >= 0.0) {
        return Err(invalid("inputs", format!("square-root argument {numerator} is negative")));
    }
    let sqrt_term = (numerator / (4.0 * (n - 1.0))).sqrt();
    let inv_sqrt_n = 1.0 / n.sqrt();
    let omega_term = 2.0 * inputs.omega;
    Ok(BoundTerms {
        covering_log,
        sigma,
        inv_sqrt_n,
        omega_term,
        sqrt_term,
        total: inv_sqrt_n + omega_term + sqrt_term,
    })
}

pub fn pac_bayes_bound_term(inputs: &BoundInputs) -> Result<f64> {
    Ok(pac_bayes_bound_terms(inputs)?.total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covering_examples() {
        let c = covering_number_bound(1.0, 2, 1.0).unwrap();
        assert_eq!(c.value, Some(8.0));
        let k = 7usize;
        let unit = covering_number_bound(1.5, k, 2.0 * 1.5 * (k as f64).sqrt()).unwrap();
        assert!(unit.log_value.abs() < 1e-12);
        let huge = covering_number_bound(1.0, 5000, 1e-3).unwrap();
        assert!(huge.value.is_none() && huge.log_value.is_finite());
    }

    #[test]
    fn sigma_without_correction() {
        let s = sigma_from_rho(0.3, 9, 1.0, 1).unwrap();
        assert!((s - 0.1).abs() < 1e-15);
    }

    #[test]
    fn bound_rejects_bad_inputs() {
        assert!(pac_bayes_bound_term(&BoundInputs::new(1, 1, 1.0, 1.0, 1.0)).is_err());
        assert!(pac_bayes_bound_term(&BoundInputs::new(1, 2, 1.0, 1.0, 0.0)).is_err());
        assert!(pac_bayes_bound_term(&BoundInputs::new(0, 2, 1.0, 1.0, 0.5)).is_err());
        assert!(pac_bayes_bound_term(&BoundInputs::new(1, 2, -1.0, 1.0, 0.5)).is_err());
    }

    #[test]
    fn omega_is_added_twice() {
        let mut inputs = BoundInputs::new(3, 50, 1.0, 0.1, 0.1);
        let base = pac_bayes_bound_term(&inputs).unwrap();
        inputs.omega = 0.25;
        assert!((pac_bayes_bound_term(&inputs).unwrap() - base - 0.5).abs() < 1e-12);
    }
}
