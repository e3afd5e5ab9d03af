//! Versioned checkpoints as canonical JSON: sorted keys, no whitespace, shortest
//! round-trip number formatting. Saving a loaded checkpoint reproduces its bytes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use sabnn_core::data::DatasetFingerprint;
use sabnn_core::models::MlpSpec;
use sabnn_core::trainers::{Artifact, Method, TrainConfig};

use crate::error::{CliError, CliResult};
use crate::source::DataSpec;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub method: Method,
    pub seed: u64,
    pub config: TrainConfig,
    pub spec: MlpSpec,
    pub data: DataSpec,
    pub fingerprint: DatasetFingerprint,
    pub payload: Artifact,
}

impl Checkpoint {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Runtime(format!("invalid checkpoint: {msg}")));
        if self.format_version != FORMAT_VERSION {
            return bad(format!("format version {} is not {FORMAT_VERSION}", self.format_version));
        }
        if !self.payload.matches(self.method) {
            return bad(format!("{} payload for method {}", self.payload.kind(), self.method));
        }
        if self.config.method != self.method || self.config.seed != self.seed {
            return bad("config does not agree with the header".into());
        }
        let k = self.spec.num_params();
        let sizes_ok = match &self.payload {
            Artifact::Gaussian { posterior, .. } => posterior.len() == k,
            Artifact::Swag { stats, .. } => stats.mean().len() == k,
            Artifact::Particles { set } => set.particles().iter().all(|p| p.params.len() == k),
            Artifact::Dropout { params, .. } => params.len() == k,
            Artifact::Ensemble { members } => members.iter().all(|m| m.len() == k),
        };
        if !sizes_ok {
            return bad(format!("payload does not have {k} parameters"));
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> CliResult<String> {
        // serde_json's default map is ordered, so going through a Value sorts every key
        let value = serde_json::to_value(self).map_err(|e| CliError::Runtime(e.to_string()))?;
        if contains_null(&value) {
            return Err(CliError::Runtime("checkpoint holds a non-finite number and cannot be saved".into()));
        }
        serde_json::to_string(&value).map_err(|e| CliError::Runtime(e.to_string()))
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| CliError::Runtime(format!("invalid checkpoint: {e}")))?;
        ck.validate()?;
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_canonical_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// serde_json writes non-finite floats as `null`; no checkpoint field is nullable except
/// optional config values, which are omitted-or-finite by validation.
fn contains_null(v: &serde_json::Value) -> bool {
    use serde_json::Value;
    match v {
        Value::Array(items) => items.iter().any(contains_null),
        Value::Object(map) => map.iter().any(|(k, x)| !OPTIONAL_KEYS.contains(&k.as_str()) && contains_null(x)),
        Value::Null => true,
        _ => false,
    }
}

const OPTIONAL_KEYS: [&str; 4] = ["lambda", "sgld_temperature", "swag_start_epoch", "train_fraction"];
