//! Dataset selection: `two-moons:n=400,noise=0.2`, `blobs:n=300,k=3,spread=0.5`, or
//! `csv:PATH`, optionally split into train and test sides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use sabnn_core::data::{gen_gaussian_blobs, gen_two_moons, load_csv, split_normalize, CsvOptions, Dataset};

use crate::error::{usage, CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Source {
    TwoMoons { n: usize, noise: f64, seed: u64 },
    Blobs { n: usize, k: usize, spread: f64, seed: u64 },
    Csv { path: String, header: bool },
}

fn parse_args(kind: &str, rest: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for part in rest.split(',').filter(|p| !p.is_empty()) {
        let (k, v) =
            part.split_once('=').ok_or_else(|| usage(format!("--data {kind}: expected key=value, got {part:?}")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

fn take<T: FromStr>(args: &mut BTreeMap<String, String>, kind: &str, key: &str, default: T) -> CliResult<T> {
    match args.remove(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| usage(format!("--data {kind}: invalid {key} {v:?}"))),
    }
}

fn reject_rest(args: BTreeMap<String, String>, kind: &str) -> CliResult<()> {
    match args.keys().next() {
        Some(k) => Err(usage(format!("--data {kind}: unknown argument {k}"))),
        None => Ok(()),
    }
}

impl FromStr for Source {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "two-moons" => {
                let mut a = parse_args(kind, rest)?;
                let src = Source::TwoMoons {
                    n: take(&mut a, kind, "n", 400)?,
                    noise: take(&mut a, kind, "noise", 0.2)?,
                    seed: take(&mut a, kind, "seed", 0)?,
                };
                reject_rest(a, kind)?;
                Ok(src)
            }
            "blobs" => {
                let mut a = parse_args(kind, rest)?;
                let src = Source::Blobs {
                    n: take(&mut a, kind, "n", 300)?,
                    k: take(&mut a, kind, "k", 3)?,
                    spread: take(&mut a, kind, "spread", 0.5)?,
                    seed: take(&mut a, kind, "seed", 0)?,
                };
                reject_rest(a, kind)?;
                Ok(src)
            }
            "csv" | "csv-header" if !rest.is_empty() => {
                Ok(Source::Csv { path: rest.to_string(), header: kind == "csv-header" })
            }
            _ => {
                Err(usage(format!("--data: expected two-moons:..., blobs:..., csv:PATH or csv-header:PATH, got {s:?}")))
            }
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::TwoMoons { n, noise, seed } => write!(f, "two-moons:n={n},noise={noise},seed={seed}"),
            Source::Blobs { n, k, spread, seed } => write!(f, "blobs:n={n},k={k},spread={spread},seed={seed}"),
            Source::Csv { path, header: false } => write!(f, "csv:{path}"),
            Source::Csv { path, header: true } => write!(f, "csv-header:{path}"),
        }
    }
}

impl Source {
    pub fn load(&self) -> CliResult<Dataset> {
        Ok(match self {
            Source::TwoMoons { n, noise, seed } => gen_two_moons(*n, *noise, *seed)?,
            Source::Blobs { n, k, spread, seed } => {
                if *k < 2 {
                    return Err(usage("--data blobs: need k ≥ 2"));
                }
                // centers evenly spaced on a circle of radius 3
                let centers: Vec<Vec<f64>> = (0..*k)
                    .map(|i| {
                        let a = std::f64::consts::TAU * i as f64 / *k as f64;
                        vec![3.0 * a.cos(), 3.0 * a.sin()]
                    })
                    .collect();
                gen_gaussian_blobs(*n, &centers, *spread, *seed)?
            }
            Source::Csv { path, header } => load_csv(path, CsvOptions { has_header: *header, ..Default::default() })?,
        })
    }
}

/// Which rows a command sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Split {
    Train,
    Test,
}

impl FromStr for Split {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            _ => Err(usage(format!("--split: expected train or test, got {s:?}"))),
        }
    }
}

/// A source plus an optional deterministic train/test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSpec {
    pub source: Source,
    /// `None` trains on every row, unnormalized.
    pub train_fraction: Option<f64>,
    pub split_seed: u64,
}

impl DataSpec {
    pub fn load(&self, split: Split) -> CliResult<Dataset> {
        let full = self.source.load()?;
        match (self.train_fraction, split) {
            (None, Split::Train) => Ok(full),
            (None, Split::Test) => Err(usage("--split test needs a dataset trained with --train-fraction")),
            (Some(f), side) => {
                let (train, test) = split_normalize(&full, f, self.split_seed)?;
                Ok(if side == Split::Train { train } else { test })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_generators_with_defaults() {
        let s: Source = "two-moons:n=400,noise=0.2".parse().unwrap();
        assert_eq!(s, Source::TwoMoons { n: 400, noise: 0.2, seed: 0 });
        assert_eq!(s.to_string().parse::<Source>().unwrap(), s);
        let b: Source = "blobs:k=4".parse().unwrap();
        assert_eq!(b, Source::Blobs { n: 300, k: 4, spread: 0.5, seed: 0 });
        let c: Source = "csv:/tmp/a,b.csv".parse().unwrap();
        assert_eq!(c, Source::Csv { path: "/tmp/a,b.csv".into(), header: false });
    }

    #[test]
    fn rejects_unknown_arguments() {
        assert!("two-moons:m=3".parse::<Source>().is_err());
        assert!("two-moons:n=x".parse::<Source>().is_err());
        assert!("spiral".parse::<Source>().is_err());
        assert!("csv:".parse::<Source>().is_err());
    }
}
