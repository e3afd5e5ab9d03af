#![allow(dead_code)]

use rand::Rng;
use sabnn_core::diffcore::Tensor;
use sabnn_core::models::{Activation, FlatParams, MlpSpec};
use sabnn_core::rng::{seeded, SeededRng};

/// Straight-line forward pass with explicit loops, independent of the tape.
pub fn reference_logits(spec: &MlpSpec, params: &[f64], x: &Tensor) -> Vec<Vec<f64>> {
    let widths = spec.widths();
    let mut offset = 0;
    let mut layers = Vec::new();
    for pair in widths.windows(2) {
        let (i, o) = (pair[0], pair[1]);
        let w = &params[offset..offset + i * o];
        offset += i * o;
        let b = &params[offset..offset + o];
        offset += o;
        layers.push((i, o, w, b));
    }
    (0..x.rows())
        .map(|r| {
            let mut h: Vec<f64> = x.row(r).to_vec();
            for (l, &(i, o, w, b)) in layers.iter().enumerate() {
                let mut z = vec![0.0; o];
                for j in 0..o {
                    let mut acc = b[j];
                    for k in 0..i {
                        acc += h[k] * w[k * o + j];
                    }
                    z[j] = acc;
                }
                if l + 1 < layers.len() {
                    for v in &mut z {
                        *v = match spec.activations()[l] {
                            Activation::Relu => v.max(0.0),
                            Activation::Tanh => v.tanh(),
                        };
                    }
                }
                h = z;
            }
            h
        })
        .collect()
}

pub fn reference_cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (row, &y) in logits.iter().zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    total / labels.len() as f64
}

pub struct RandomProblem {
    pub spec: MlpSpec,
    pub params: FlatParams,
    pub x: Tensor,
    pub labels: Vec<usize>,
}

pub fn random_problem(rng: &mut SeededRng, widths: Vec<usize>, act: Activation, batch: usize) -> RandomProblem {
    let spec = MlpSpec::uniform(widths, act).unwrap();
    let mut params = spec.init_params(rng);
    // non-zero biases so every parameter participates
    for v in params.values_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    let d = spec.input_dim();
    let x = Tensor::matrix(batch, d, (0..batch * d).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
    let labels = (0..batch).map(|_| rng.random_range(0..spec.output_dim())).collect();
    RandomProblem { spec, params, x, labels }
}

pub fn rng(seed: u64) -> SeededRng {
    seeded(seed)
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
