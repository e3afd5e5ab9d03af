//! `key = value` configuration files. Flags given on the command line take precedence.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::str::FromStr;

use crate::error::{usage, CliResult};

#[derive(Debug, Default)]
pub struct ConfigFile {
    entries: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| usage(format!("--config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
        }
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) =
                line.split_once('=').ok_or_else(|| usage(format!("config line {}: expected key = value", i + 1)))?;
            let key = normalize_key(k);
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(usage(format!("config line {}: duplicate key {key}", i + 1)));
            }
        }
        Ok(Self { entries, used: RefCell::new(BTreeSet::new()) })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        let v = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v)
    }

    /// `flag` if given, else the parsed config value for `key`.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        let from_file = match self.raw(key) {
            Some(v) => Some(v.parse::<T>().map_err(|e| usage(format!("config key {key}: invalid value {v:?}: {e}")))?),
            None => None,
        };
        Ok(flag.or(from_file))
    }

    pub fn pick_or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }

    /// Boolean switch: set if the flag is present or the file says `true`.
    pub fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.pick::<bool>(None, key)?.unwrap_or(false))
    }

    /// Fails on any key no option consumed.
    pub fn finish(&self) -> CliResult<()> {
        let used = self.used.borrow();
        match self.entries.keys().find(|k| !used.contains(*k)) {
            Some(k) => Err(usage(format!("unknown config key {k}"))),
            None => Ok(()),
        }
    }
}
