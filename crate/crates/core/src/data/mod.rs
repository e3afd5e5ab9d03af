//! Datasets: synthetic generators, CSV ingestion, deterministic train/test splits and
//! train-fitted feature normalization.

mod dataset;
mod generate;
mod io;

pub use dataset::{fnv1a64, split_normalize, Dataset, DatasetFingerprint, Normalization, STD_FLOOR};
pub use generate::{gen_gaussian_blobs, gen_two_moons};
pub use io::{load_csv, read_csv, CsvOptions};
