use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::diffcore::hessian_vector_product;
use crate::error::{invalid, Result};
use crate::rng::standard_normal_vec;

/// Finite-difference step of the gradient-based Hessian-vector product.
pub const HVP_STEP: f64 = 1e-4;
/// Relative Rayleigh-quotient change below which an eigenpair counts as converged.
pub const RAYLEIGH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenEstimate {
    /// Descending.
    pub values: Vec<f64>,
    /// `λ1 / λk` for the last estimated `λk`.
    pub ratio: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let c = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, ui)| *x -= c * ui);
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// Leading `k` eigenvalues of the symmetric operator `hvp` on `R^dim` by power iteration,
/// deflating each found eigenvector with Gram–Schmidt inside every application.
pub fn power_iteration<H, R>(mut hvp: H, dim: usize, k: usize, iters: usize, rng: &mut R) -> Result<EigenEstimate>
where
    H: FnMut(&[f64]) -> Result<Vec<f64>>,
    R: Rng + ?Sized,
{
    if k == 0 || k > dim {
        return Err(invalid("k_eigs", format!("need 1 ≤ k ≤ {dim}, got {k}")));
    }
    if iters < 10 {
        return Err(invalid("iters", format!("need at least 10 iterations, got {iters}")));
    }
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for _ in 0..k {
        let mut v = standard_normal_vec(rng, dim);
        project_out(&mut v, &basis);
        normalize(&mut v);
        let mut lambda = f64::NAN;
        for _ in 0..iters {
            let mut w = hvp(&v)?;
            project_out(&mut w, &basis);
            let rayleigh = dot(&v, &w);
            let converged = (rayleigh - lambda).abs() <= RAYLEIGH_TOL * rayleigh.abs().max(f64::MIN_POSITIVE);
            lambda = rayleigh;
            if normalize(&mut w) == 0.0 {
                break;
            }
            v = w;
            if converged {
                break;
            }
        }
        // re-orthogonalise against round-off before storing
        project_out(&mut v, &basis);
        normalize(&mut v);
        basis.push(v);
        values.push(lambda);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    let ratio = values[0] / values[k - 1];
    Ok(EigenEstimate { values, ratio })
}

/// Top-`k` Hessian eigenvalues of a loss at `params`, from central differences of its
/// gradient with step [`HVP_STEP`].
pub fn top_eigenvalues<G, R>(
    mut grad_fn: G,
    params: &[f64],
    k: usize,
    iters: usize,
    rng: &mut R,
) -> Result<EigenEstimate>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
    R: Rng + ?Sized,
{
    power_iteration(|v| hessian_vector_product(&mut grad_fn, params, v, HVP_STEP), params.len(), k, iters, rng)
}
