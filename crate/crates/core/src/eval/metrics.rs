use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{invalid, Result};

/// Floor applied to the label probability before taking its log.
pub const PROB_FLOOR: f64 = 1e-12;

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn check(probs: &Tensor, labels: &[usize]) -> Result<()> {
    if probs.shape().len() != 2 || probs.rows() != labels.len() {
        return Err(invalid("probs", "need one probability row per label"));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= probs.cols()) {
        return Err(invalid("labels", format!("label {y} outside {} classes", probs.cols())));
    }
    Ok(())
}

pub fn accuracy(probs: &Tensor, labels: &[usize]) -> Result<f64> {
    check(probs, labels)?;
    let hits = labels.iter().enumerate().filter(|&(r, &y)| argmax(probs.row(r)) == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean `−log p[label]` with `p` floored at [`PROB_FLOOR`].
pub fn nll(probs: &Tensor, labels: &[usize]) -> Result<f64> {
    check(probs, labels)?;
    let total: f64 = labels.iter().enumerate().map(|(r, &y)| -probs.row(r)[y].max(PROB_FLOOR).ln()).sum();
    Ok(total / labels.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: usize,
    /// Mean confidence of the bin, 0 when empty.
    pub mean_conf: f64,
    /// Fraction correct in the bin, 0 when empty.
    pub accuracy: f64,
    pub gap: f64,
}

/// Equal-width confidence bins over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityTable {
    pub rows: Vec<ReliabilityRow>,
}

impl ReliabilityTable {
    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.count).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_lo,bin_hi,count,mean_conf,accuracy,gap\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.10e},{:.10e},{},{:.10e},{:.10e},{:.10e}\n",
                r.bin_lo, r.bin_hi, r.count, r.mean_conf, r.accuracy, r.gap
            ));
        }
        out
    }
}

/// Bin `b` covers `(b/B, (b+1)/B]`, with bin 0 also taking confidence 0.
fn bin_of(conf: f64, bins: usize) -> usize {
    let edge = |i: usize| i as f64 / bins as f64;
    let mut b = ((conf * bins as f64).ceil() as usize).clamp(1, bins) - 1;
    while b > 0 && conf <= edge(b) {
        b -= 1;
    }
    while b + 1 < bins && conf > edge(b + 1) {
        b += 1;
    }
    b
}

/// Expected calibration error `Σ_b (n_b/N)·|acc_b − conf_b|` over `bins` equal-width,
/// right-closed confidence bins, with its reliability table.
pub fn ece(probs: &Tensor, labels: &[usize], bins: usize) -> Result<(f64, ReliabilityTable)> {
    check(probs, labels)?;
    if bins == 0 {
        return Err(invalid("bins", "need at least one bin"));
    }
    let mut count = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut correct = vec![0usize; bins];
    for (r, &y) in labels.iter().enumerate() {
        let row = probs.row(r);
        let pred = argmax(row);
        let b = bin_of(row[pred], bins);
        count[b] += 1;
        conf_sum[b] += row[pred];
        correct[b] += usize::from(pred == y);
    }
    let n = labels.len() as f64;
    let mut total = 0.0;
    let rows = (0..bins)
        .map(|b| {
            let (mean_conf, acc) = if count[b] == 0 {
                (0.0, 0.0)
            } else {
                let c = count[b] as f64;
                (conf_sum[b] / c, correct[b] as f64 / c)
            };
            let gap = (acc - mean_conf).abs();
            total += count[b] as f64 / n * gap;
            ReliabilityRow {
                bin_lo: b as f64 / bins as f64,
                bin_hi: (b + 1) as f64 / bins as f64,
                count: count[b],
                mean_conf,
                accuracy: acc,
                gap,
            }
        })
        .collect();
    Ok((total, ReliabilityTable { rows }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins_are_right_closed() {
        assert_eq!(bin_of(0.0, 20), 0);
        assert_eq!(bin_of(0.05, 20), 0);
        assert_eq!(bin_of(0.15, 20), 2);
        assert_eq!(bin_of(0.1500001, 20), 3);
        assert_eq!(bin_of(1.0, 20), 19);
        assert_eq!(bin_of(0.5, 2), 0);
        assert_eq!(bin_of(0.55, 2), 1);
    }

    #[test]
    fn ties_go_to_the_lowest_class() {
        let probs = Tensor::matrix(3, 2, vec![0.5; 6]).unwrap();
        assert_eq!(accuracy(&probs, &[0, 0, 0]).unwrap(), 1.0);
        assert!((nll(&probs, &[0, 1, 0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_is_floored() {
        let probs = Tensor::matrix(1, 2, vec![1.0, 0.0]).unwrap();
        assert!((nll(&probs, &[1]).unwrap() + PROB_FLOOR.ln()).abs() < 1e-12);
        assert_eq!(nll(&probs, &[0]).unwrap(), 0.0);
    }

    #[test]
    fn csv_has_one_row_per_bin() {
        let probs = Tensor::matrix(2, 2, vec![0.9, 0.1, 0.3, 0.7]).unwrap();
        let (_, table) = ece(&probs, &[0, 0], 20).unwrap();
        let csv = table.to_csv();
        assert_eq!(csv.lines().count(), 21);
        assert!(csv.starts_with("bin_lo,bin_hi,count,mean_conf,accuracy,gap\n"));
        assert_eq!(table.total(), 2);
    }
}
