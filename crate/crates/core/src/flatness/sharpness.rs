use super::sam::MIN_GRAD_NORM;
use crate::error::{invalid, Error, Result};

/// Approximates `max_{‖ε‖₂≤ρ} L(θ+ε) − L(θ)` by projected normalized-gradient ascent.
///
/// Each of the `ascent_steps` iterations moves the offset by `ρ` along the normalized
/// gradient and projects back onto the `ρ`-ball, so a single step reproduces the one-step SAM
/// maximiser and further steps rotate the offset towards the locally steepest boundary point.
/// A zero gradient at `θ` itself (e.g. at a stationary point) starts the ascent along the
/// all-ones direction. The largest loss seen, `θ` included, is reported, so the result is
/// never negative.
pub fn sharpness<F>(mut loss_grad: F, params: &[f64], rho: f64, ascent_steps: usize) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(rho > 0.0) {
        return Err(invalid("rho", format!("must be positive, got {rho}")));
    }
    if ascent_steps == 0 {
        return Err(invalid("ascent_steps", "must be at least 1"));
    }
    let (base, mut grad) = loss_grad(params)?;
    if !base.is_finite() {
        return Err(Error::NonFinite { context: "sharpness ascent", coordinate: 0 });
    }
    let k = params.len();
    let mut offset = vec![0.0; k];
    let mut best = base;
    let mut point = params.to_vec();
    for step in 0..ascent_steps {
        let g_norm = norm(&grad);
        if g_norm >= MIN_GRAD_NORM {
            offset.iter_mut().zip(&grad).for_each(|(o, g)| *o += rho * g / g_norm);
        } else if step == 0 {
            let unit = 1.0 / (k as f64).sqrt();
            offset.iter_mut().for_each(|o| *o += rho * unit);
        } else {
            break;
        }
        let o_norm = norm(&offset);
        if o_norm > rho {
            offset.iter_mut().for_each(|o| *o *= rho / o_norm);
        }
        point.iter_mut().zip(params.iter().zip(&offset)).for_each(|(p, (t, o))| *p = t + o);
        let (loss, g) = loss_grad(&point)?;
        if !loss.is_finite() {
            return Err(Error::NonFinite { context: "sharpness ascent", coordinate: step + 1 });
        }
        best = best.max(loss);
        grad = g;
    }
    Ok(best - base)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
