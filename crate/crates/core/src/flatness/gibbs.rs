//! Discrete Gibbs posteriors `q_i ∝ exp(−λ L_i) p_i` and an exhaustive-search oracle for the
//! variational problem they solve, `min_q λ Σ q_i L_i + KL(q ‖ p)`.

use crate::error::{invalid, Error, Result};

const PRIOR_SUM_TOL: f64 = 1e-12;
const ORACLE_MAX_POINTS: usize = 4;

/// Finite parameter grid with per-point empirical loss and prior mass.
#[derive(Debug, Clone, PartialEq)]
pub struct GibbsGrid {
    labels: Vec<String>,
    loss: Vec<f64>,
    prior: Vec<f64>,
}

impl GibbsGrid {
    pub fn new(labels: Vec<String>, loss: Vec<f64>, prior: Vec<f64>) -> Result<Self> {
        Self::validate(&labels, &loss, &prior)?;
        let total: f64 = prior.iter().sum();
        if (total - 1.0).abs() > PRIOR_SUM_TOL {
            return Err(invalid("prior", format!("masses sum to {total}, not 1")));
        }
        Ok(Self { labels, loss, prior })
    }

    /// Normalises nonnegative prior weights.
    pub fn from_weights(labels: Vec<String>, loss: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        Self::validate(&labels, &loss, &weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroPriorMass);
        }
        let prior = weights.iter().map(|w| w / total).collect();
        Ok(Self { labels, loss, prior })
    }

    pub fn uniform(labels: Vec<String>, loss: Vec<f64>) -> Result<Self> {
        let n = loss.len();
        Self::from_weights(labels, loss, vec![1.0; n])
    }

    fn validate(labels: &[String], loss: &[f64], prior: &[f64]) -> Result<()> {
        if loss.is_empty() {
            return Err(invalid("grid", "needs at least one point"));
        }
        if labels.len() != loss.len() || prior.len() != loss.len() {
            return Err(invalid("grid", "labels, losses and prior must have equal length"));
        }
        if let Some(i) = loss.iter().position(|l| !l.is_finite()) {
            return Err(Error::NonFinite { context: "grid loss", coordinate: i });
        }
        if prior.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("prior", "masses must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn loss(&self) -> &[f64] {
        &self.loss
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn len(&self) -> usize {
        self.loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loss.is_empty()
    }

    /// Replaces each loss by its maximum over the grid points within Euclidean distance
    /// `rho` of that point, i.e. `L(s(θ_i))` restricted to the grid.
    pub fn sharpened(&self, coords: &[Vec<f64>], rho: f64) -> Result<Self> {
        if coords.len() != self.len() {
            return Err(invalid("coords", "one coordinate vector per grid point"));
        }
        if !(rho >= 0.0) {
            return Err(invalid("rho", format!("must be nonnegative, got {rho}")));
        }
        let loss = coords
            .iter()
            .map(|ci| {
                coords
                    .iter()
                    .zip(&self.loss)
                    .filter(|(cj, _)| ci.iter().zip(*cj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() <= rho)
                    .map(|(_, &l)| l)
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        Ok(Self { labels: self.labels.clone(), loss, prior: self.prior.clone() })
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(invalid("lambda", format!("must be finite and nonnegative, got {lambda}")));
    }
    Ok(())
}

/// Closed-form minimiser, computed in log space with max-subtraction.
pub fn gibbs_posterior_grid(grid: &GibbsGrid, lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    let logw: Vec<f64> = grid
        .loss
        .iter()
        .zip(&grid.prior)
        .map(|(l, p)| if *p > 0.0 { -lambda * l + p.ln() } else { f64::NEG_INFINITY })
        .collect();
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroPriorMass);
    }
    let w: Vec<f64> = logw.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / z).collect())
}

/// `λ Σ q_i L_i + Σ q_i log(q_i/p_i)` with `0·log 0 = 0`.
pub fn gibbs_objective(grid: &GibbsGrid, q: &[f64], lambda: f64) -> f64 {
    q.iter().zip(grid.loss.iter().zip(&grid.prior)).map(|(&qi, (&l, &p))| term(qi, l, p, lambda)).sum()
}

fn term(q: f64, loss: f64, prior: f64, lambda: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else if prior == 0.0 {
        f64::INFINITY
    } else {
        q * (lambda * loss + (q / prior).ln())
    }
}

/// Exhaustive minimisation of [`gibbs_objective`] over the simplex discretised at step
/// `resolution`. Exponential in the grid size, so limited to four points.
pub fn gibbs_oracle(grid: &GibbsGrid, lambda: f64, resolution: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if grid.len() > ORACLE_MAX_POINTS {
        return Err(invalid("grid", format!("oracle supports at most {ORACLE_MAX_POINTS} points, got {}", grid.len())));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(invalid("resolution", format!("must lie in (0, 1], got {resolution}")));
    }
    let steps = (1.0 / resolution).round() as usize;
    // the objective is separable, so tabulate each coordinate's term once
    let tables: Vec<Vec<f64>> = (0..grid.len())
        .map(|i| (0..=steps).map(|k| term(k as f64 / steps as f64, grid.loss[i], grid.prior[i], lambda)).collect())
        .collect();
    let mut best = (f64::INFINITY, vec![0usize; grid.len()]);
    let mut current = vec![0usize; grid.len()];
    search(&tables, 0, steps, 0.0, &mut current, &mut best);
    if !best.0.is_finite() {
        return Err(Error::ZeroPriorMass);
    }
    Ok(best.1.iter().map(|&k| k as f64 / steps as f64).collect())
}

fn search(
    tables: &[Vec<f64>],
    level: usize,
    remaining: usize,
    partial: f64,
    current: &mut Vec<usize>,
    best: &mut (f64, Vec<usize>),
) {
    let n = tables.len();
    if level == n - 1 {
        let value = partial + tables[level][remaining];
        if value < best.0 {
            current[level] = remaining;
            *best = (value, current.clone());
        }
        return;
    }
    if level == n - 2 {
        let (a, b) = (&tables[level], &tables[level + 1]);
        for k in 0..=remaining {
            let value = partial + a[k] + b[remaining - k];
            if value < best.0 {
                current[level] = k;
                current[level + 1] = remaining - k;
                *best = (value, current.clone());
            }
        }
        return;
    }
    for k in 0..=remaining {
        current[level] = k;
        search(tables, level + 1, remaining - k, partial + tables[level][k], current, best);
    }
}

/// `½ Σ |p_i − q_i|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn zero_lambda_returns_prior() {
        let grid = GibbsGrid::new(labels(3), vec![0.1, 2.0, 5.0], vec![0.2, 0.3, 0.5]).unwrap();
        let q = gibbs_posterior_grid(&grid, 0.0).unwrap();
        for (a, b) in q.iter().zip(grid.prior()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn two_point_example() {
        let grid = GibbsGrid::uniform(labels(2), vec![0.0, std::f64::consts::LN_2]).unwrap();
        let q = gibbs_posterior_grid(&grid, 1.0).unwrap();
        assert!((q[0] - 2.0 / 3.0).abs() < 1e-15 && (q[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn equal_losses_keep_prior() {
        let grid = GibbsGrid::new(labels(3), vec![1.5; 3], vec![0.1, 0.6, 0.3]).unwrap();
        for lambda in [0.5, 10.0, 1e4] {
            let q = gibbs_posterior_grid(&grid, lambda).unwrap();
            assert!(total_variation(&q, grid.prior()) < 1e-12);
        }
    }

    #[test]
    fn large_lambda_is_stable() {
        let grid = GibbsGrid::uniform(labels(2), vec![1000.0, 1001.0]).unwrap();
        let q = gibbs_posterior_grid(&grid, 1e3).unwrap();
        assert!(q.iter().all(|v| v.is_finite()));
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_prior_mass_is_an_error() {
        assert!(matches!(
            GibbsGrid::from_weights(labels(2), vec![0.0, 1.0], vec![0.0, 0.0]),
            Err(Error::ZeroPriorMass)
        ));
        assert!(GibbsGrid::new(labels(2), vec![0.0, 1.0], vec![0.5, 0.6]).is_err());
    }

    #[test]
    fn oracle_edge_cases() {
        let single = GibbsGrid::uniform(labels(1), vec![3.0]).unwrap();
        assert_eq!(gibbs_oracle(&single, 2.0, 1e-3).unwrap(), vec![1.0]);
        let five = GibbsGrid::uniform(labels(5), vec![0.0; 5]).unwrap();
        assert!(gibbs_oracle(&five, 1.0, 0.1).is_err());
        let grid = GibbsGrid::new(labels(3), vec![0.3, 0.1, 2.0], vec![0.5, 0.25, 0.25]).unwrap();
        let q = gibbs_oracle(&grid, 0.0, 1e-3).unwrap();
        assert!(total_variation(&q, grid.prior()) <= 1e-3);
    }

    #[test]
    fn sharpened_grid_takes_neighbourhood_max() {
        let grid = GibbsGrid::uniform(labels(4), vec![0.0, 0.5, 0.2, 3.0]).unwrap();
        let coords = vec![vec![0.0], vec![1.0], vec![2.0], vec![10.0]];
        let sharp = grid.sharpened(&coords, 1.0).unwrap();
        assert_eq!(sharp.loss(), &[0.5, 0.5, 0.5, 3.0]);
        assert_eq!(grid.sharpened(&coords, 0.0).unwrap().loss(), grid.loss());
    }
}
