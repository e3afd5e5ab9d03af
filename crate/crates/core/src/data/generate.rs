use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::diffcore::Tensor;
use crate::error::{invalid, Result};
use crate::rng::seeded;

/// Two interleaved unit half-circles: class 0 at `(cos t, sin t)`, class 1 at
/// `(1 − cos t, 0.5 − sin t)`, `t` evenly spaced on `[0, π]`, then isotropic Gaussian noise.
pub fn gen_two_moons(n: usize, noise_std: f64, seed: u64) -> Result<Dataset> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid("n", format!("must be even and at least 2, got {n}")));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(invalid("noise_std", format!("must be nonnegative, got {noise_std}")));
    }
    let half = n / 2;
    let angle = |i: usize| {
        if half == 1 {
            0.0
        } else {
            std::f64::consts::PI * i as f64 / (half - 1) as f64
        }
    };
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    for class in 0..2 {
        for i in 0..half {
            let t = angle(i);
            let (x, y) = if class == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
            data.push(x);
            data.push(y);
            labels.push(class);
        }
    }
    if noise_std > 0.0 {
        for v in &mut data {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v += noise_std * z;
        }
    }
    Dataset::new(Tensor::matrix(n, 2, data)?, labels, 2)
}

/// `n / centers.len()` isotropic Gaussian points around each center, one class per center.
pub fn gen_gaussian_blobs(n: usize, centers: &[Vec<f64>], spread: f64, seed: u64) -> Result<Dataset> {
    let c = centers.len();
    if c < 2 {
        return Err(invalid("centers", "need at least two centers"));
    }
    let d = centers[0].len();
    if d == 0 || centers.iter().any(|ctr| ctr.len() != d) {
        return Err(invalid("centers", "all centers must share a positive dimension"));
    }
    if n == 0 || !n.is_multiple_of(c) {
        return Err(invalid("n", format!("must be a positive multiple of {c}, got {n}")));
    }
    if !(spread >= 0.0 && spread.is_finite()) {
        return Err(invalid("spread", format!("must be nonnegative, got {spread}")));
    }
    let mut rng = seeded(seed);
    let mut data = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..n / c {
            for &m in center {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(m + spread * z);
            }
            labels.push(class);
        }
    }
    Dataset::new(Tensor::matrix(n, d, data)?, labels, c)
}
