//! Run manifest: everything needed to reproduce a run bit-for-bit within
//! one build — the config snapshot, the dataset fingerprint and the
//! artifact paths.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::model_io::write_atomic;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArtifactPaths {
    pub model: String,
    pub record: String,
    pub manifest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub seed: u64,
    pub dataset_fingerprint: String,
    pub config: RunConfig,
    pub artifacts: ArtifactPaths,
}

impl RunManifest {
    pub fn new(config: RunConfig, artifacts: ArtifactPaths) -> Result<Self> {
        Ok(RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            dataset_fingerprint: config.dataset_fingerprint()?,
            config,
            artifacts,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        write_atomic(path.as_ref(), text.as_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::ModelFormat(format!("bad manifest: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trip() {
        let cfg: RunConfig = toml::from_str(
            r#"
seed = 1
[data]
source = "synth_regression"
kind = "linear"
n = 100
[model]
hidden_layers = 2
[train]
epochs = 10
batch_size = 8
[prune]
epsilon = 0.05
"#,
        )
        .unwrap();
        let manifest = RunManifest::new(
            cfg,
            ArtifactPaths {
                model: "model.bin".into(),
                record: "record.json".into(),
                manifest: "manifest.json".into(),
            },
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        manifest.save(&path).unwrap();
        let back = RunManifest::load(&path).unwrap();
        assert_eq!(back.seed, 1);
        assert_eq!(back.dataset_fingerprint, manifest.dataset_fingerprint);
    }
}
