use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Lower bound applied to `|μ|/σ` so no coordinate is frozen by a zero scaling.
pub const GEOMETRY_FLOOR: f64 = 1e-12;

/// Gradients with a Euclidean norm below this leave the point unperturbed.
pub const MIN_GRAD_NORM: f64 = 1e-12;

/// Shape of the perturbation ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    /// Euclidean ball (`T = I`).
    #[default]
    Identity,
    /// Ball scaled by `T = diag(|μ|/σ)`.
    MuOverSigma,
}

impl std::str::FromStr for GeometryKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Self::Identity),
            "mu-over-sigma" => Ok(Self::MuOverSigma),
            other => Err(invalid("geometry", format!("unknown geometry `{other}`"))),
        }
    }
}

impl std::fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Identity => "identity",
            Self::MuOverSigma => "mu-over-sigma",
        })
    }
}

/// Diagonal of `T`: all ones, or `max(|μ_j|/σ_j, GEOMETRY_FLOOR)`.
pub fn geometry_diag(mu: &[f64], sigma: &[f64], kind: GeometryKind) -> Vec<f64> {
    match kind {
        GeometryKind::Identity => vec![1.0; mu.len()],
        GeometryKind::MuOverSigma => mu.iter().zip(sigma).map(|(m, s)| (m.abs() / s).max(GEOMETRY_FLOOR)).collect(),
    }
}

/// `‖v‖_T = √(vᵀ diag(T)⁻¹ v)`.
pub fn t_norm(v: &[f64], t_diag: &[f64]) -> f64 {
    v.iter().zip(t_diag).map(|(x, t)| x * x / t).sum::<f64>().sqrt()
}

/// One-step ascent `μ′ = μ + ρ·(T⊙g)/√(gᵀTg)`, which puts `μ′` on the boundary of the
/// `‖·‖_T` ball of radius `ρ`. Returns `μ` unchanged when `ρ = 0` or `‖g‖ < MIN_GRAD_NORM`.
pub fn sam_perturb(mu: &[f64], grad: &[f64], rho: f64, t_diag: &[f64]) -> Vec<f64> {
    let g_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if rho == 0.0 || g_norm < MIN_GRAD_NORM {
        return mu.to_vec();
    }
    let weighted = grad.iter().zip(t_diag).map(|(g, t)| g * g * t).sum::<f64>().sqrt();
    mu.iter().zip(grad).zip(t_diag).map(|((m, g), t)| m + rho * t * g / weighted).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_geometry_is_all_ones() {
        assert_eq!(geometry_diag(&[2.0, -3.0], &[0.1, 5.0], GeometryKind::Identity), vec![1.0, 1.0]);
    }

    #[test]
    fn mu_over_sigma_geometry() {
        assert_eq!(geometry_diag(&[2.0, -3.0], &[1.0, 3.0], GeometryKind::MuOverSigma), vec![2.0, 1.0]);
        assert_eq!(geometry_diag(&[0.0], &[1.0], GeometryKind::MuOverSigma), vec![1e-12]);
    }

    #[test]
    fn zero_radius_is_identity() {
        assert_eq!(sam_perturb(&[1.0, 2.0], &[3.0, 4.0], 0.0, &[1.0, 1.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn unit_norm_step_on_three_four_five() {
        let p = sam_perturb(&[0.0, 0.0], &[3.0, 4.0], 0.05, &[1.0, 1.0]);
        assert!((p[0] - 0.03).abs() < 1e-15 && (p[1] - 0.04).abs() < 1e-15);
    }

    #[test]
    fn vanishing_gradient_skips_perturbation() {
        assert_eq!(sam_perturb(&[1.0], &[1e-13], 0.5, &[1.0]), vec![1.0]);
    }

    #[test]
    fn geometry_names_round_trip() {
        for kind in [GeometryKind::Identity, GeometryKind::MuOverSigma] {
            assert_eq!(kind.to_string().parse::<GeometryKind>().unwrap(), kind);
        }
        assert!("euclid".parse::<GeometryKind>().is_err());
    }
}
