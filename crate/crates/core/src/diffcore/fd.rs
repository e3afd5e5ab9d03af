//! Central-difference oracles used to check the tape and to form Hessian-vector products.

use crate::error::{invalid, Error, Result};

/// Central-difference estimate of `∇f(params)`, one coordinate at a time.
pub fn finite_difference_gradient<F>(mut loss_fn: F, params: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    let mut point = params.to_vec();
    let mut grad = Vec::with_capacity(params.len());
    for i in 0..params.len() {
        let orig = point[i];
        point[i] = orig + step;
        let up = loss_fn(&point)?;
        point[i] = orig - step;
        let down = loss_fn(&point)?;
        point[i] = orig;
        grad.push((up - down) / (2.0 * step));
    }
    Ok(grad)
}

/// `(∇L(θ + h·v) − ∇L(θ − h·v)) / 2h` from a gradient oracle.
pub fn hessian_vector_product<G>(mut grad_fn: G, params: &[f64], v: &[f64], step: f64) -> Result<Vec<f64>>
where
    G: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if !(step > 0.0) {
        return Err(invalid("step", format!("must be positive, got {step}")));
    }
    if v.len() != params.len() {
        return Err(Error::Shape {
            op: "hessian_vector_product",
            detail: format!("direction has {} entries, params {}", v.len(), params.len()),
        });
    }
    let shifted = |sign: f64| -> Vec<f64> { params.iter().zip(v).map(|(p, d)| p + sign * step * d).collect() };
    let up = grad_fn(&shifted(1.0))?;
    let down = grad_fn(&shifted(-1.0))?;
    if up.len() != params.len() || down.len() != params.len() {
        return Err(Error::Shape {
            op: "hessian_vector_product",
            detail: "gradient oracle returned a vector of the wrong length".into(),
        });
    }
    up.iter()
        .zip(&down)
        .enumerate()
        .map(|(i, (a, b))| {
            let hv = (a - b) / (2.0 * step);
            if hv.is_finite() {
                Ok(hv)
            } else {
                Err(Error::NonFinite { context: "hessian_vector_product", coordinate: i })
            }
        })
        .collect()
}
