use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::diffcore::Tensor;
use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Stream};

/// Lower bound on a feature's standard deviation during normalization.
pub const STD_FLOOR: f64 = 1e-8;

/// Per-feature affine map `x ↦ (x − mean) / std`, fit on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    pub fn fit(features: &Tensor) -> Self {
        let (n, d) = (features.rows(), features.cols());
        let mut mean = vec![0.0; d];
        for r in 0..n {
            for (m, v) in mean.iter_mut().zip(features.row(r)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut var = vec![0.0; d];
        for r in 0..n {
            for ((s, v), m) in var.iter_mut().zip(features.row(r)).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.iter().map(|s| (s / n as f64).sqrt().max(STD_FLOOR)).collect();
        Self { mean, std }
    }

    pub fn apply(&self, features: &Tensor) -> Result<Tensor> {
        if features.cols() != self.mean.len() {
            return Err(Error::Shape {
                op: "normalize",
                detail: format!("{} features, statistics for {}", features.cols(), self.mean.len()),
            });
        }
        let d = self.mean.len();
        let data = features.data().iter().enumerate().map(|(i, v)| (v - self.mean[i % d]) / self.std[i % d]).collect();
        Tensor::matrix(features.rows(), d, data)
    }
}

/// Identity of a dataset's contents, used to catch evaluation on mismatched data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    /// FNV-1a-64 of the canonical CSV bytes, as 16 hex digits.
    #[serde(with = "hex_u64")]
    pub hash: u64,
}

mod hex_u64 {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{v:016x}"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16).map_err(D::Error::custom)
    }
}

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Labelled `N × d` feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Tensor,
    labels: Vec<usize>,
    num_classes: usize,
    normalization: Option<Normalization>,
}

impl Dataset {
    pub fn new(features: Tensor, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.shape().len() != 2 {
            return Err(Error::Shape {
                op: "dataset",
                detail: format!("features must be a matrix, got shape {:?}", features.shape()),
            });
        }
        if labels.len() != features.rows() {
            return Err(invalid("labels", format!("{} labels for {} rows", labels.len(), features.rows())));
        }
        if num_classes < 2 {
            return Err(invalid("num_classes", "need at least two classes"));
        }
        if let Some(r) = labels.iter().position(|&y| y >= num_classes) {
            return Err(invalid("labels", format!("row {r} has label {} ≥ {num_classes}", labels[r])));
        }
        if let Some(i) = features.data().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "dataset features", coordinate: i });
        }
        Ok(Self { features, labels, num_classes, normalization: None })
    }

    pub fn features(&self) -> &Tensor {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn normalization(&self) -> Option<&Normalization> {
        self.normalization.as_ref()
    }

    /// Rows at `indices`, as a feature batch and its labels.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor, Vec<usize>)> {
        if indices.is_empty() {
            return Err(invalid("indices", "batch must be nonempty"));
        }
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(invalid("indices", format!("row {i} out of range for {} rows", self.len())));
        }
        let x = self.features.select_rows(indices);
        let y = indices.iter().map(|&i| self.labels[i]).collect();
        Ok((x, y))
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let (features, labels) = self.batch(indices)?;
        Ok(Self { features, labels, num_classes: self.num_classes, normalization: self.normalization.clone() })
    }

    /// Applies `norm` to the features and records it.
    pub fn normalized(&self, norm: &Normalization) -> Result<Self> {
        Ok(Self {
            features: norm.apply(&self.features)?,
            labels: self.labels.clone(),
            num_classes: self.num_classes,
            normalization: Some(norm.clone()),
        })
    }

    /// One line per row, features then label, shortest round-trip decimals, `\n` endings.
    pub fn to_canonical_csv(&self) -> String {
        let mut out = String::new();
        for (r, y) in self.labels.iter().enumerate() {
            for v in self.features.row(r) {
                out.push_str(&format!("{v:?},"));
            }
            out.push_str(&format!("{y}\n"));
        }
        out
    }

    pub fn fingerprint(&self) -> DatasetFingerprint {
        DatasetFingerprint {
            n: self.len(),
            d: self.dim(),
            num_classes: self.num_classes,
            hash: fnv1a64(self.to_canonical_csv().as_bytes()),
        }
    }
}

/// Shuffled split with normalization statistics fit on the training side only.
pub fn split_normalize(dataset: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(invalid("train_fraction", format!("must lie strictly between 0 and 1, got {train_fraction}")));
    }
    let n = dataset.len();
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(invalid(
            "train_fraction",
            format!("{train_fraction} of {n} rows leaves one side of the split empty"),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(seed, Stream::Shuffle));
    let train = dataset.subset(&order[..n_train])?;
    let test = dataset.subset(&order[n_train..])?;
    let norm = Normalization::fit(train.features());
    Ok((train.normalized(&norm)?, test.normalized(&norm)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn rejects_bad_labels() {
        let x = Tensor::matrix(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(Dataset::new(x.clone(), vec![0, 2], 2).is_err());
        assert!(Dataset::new(x.clone(), vec![0], 2).is_err());
        assert!(Dataset::new(x, vec![0, 1], 2).is_ok());
    }

    #[test]
    fn constant_feature_uses_floor() {
        let x = Tensor::matrix(3, 1, vec![2.0; 3]).unwrap();
        let norm = Normalization::fit(&x);
        assert_eq!(norm.std, vec![STD_FLOOR]);
        assert!(norm.apply(&x).unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fingerprint_hex_round_trip() {
        let fp = DatasetFingerprint { n: 3, d: 2, num_classes: 2, hash: 0xdead_beef };
        let json = serde_json::to_string(&fp).unwrap();
        assert!(json.contains("\"00000000deadbeef\""));
        assert_eq!(serde_json::from_str::<DatasetFingerprint>(&json).unwrap(), fp);
    }
}
