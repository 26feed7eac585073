use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// What was run and with which inputs.
///
/// Equal `input_sha256` values mean equal command, spec, config, seed and
/// version, and therefore byte-identical reports. The wall time is kept
/// out of the hash.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub spec: Value,
    pub config: Value,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub input_sha256: String,
}

impl RunManifest {
    pub fn new(command: &str, spec: Value, config: Value, seed: u64) -> Self {
        let version = env!("CARGO_PKG_VERSION").to_string();
        // Key order is fixed by the code, so this rendering is canonical.
        let canonical = serde_json::json!({
            "command": command,
            "spec": spec,
            "config": config,
            "seed": seed,
            "version": version,
        })
        .to_string();
        let input_sha256 = hex::encode(Sha256::digest(canonical.as_bytes()));
        Self { command: command.into(), spec, config, seed, version, wall_time_s: 0.0, input_sha256 }
    }

    /// Path of the manifest written next to an output file.
    pub fn sidecar(out: &Path) -> PathBuf {
        let mut name = out.file_name().map(|s| s.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        out.with_file_name(name)
    }

    pub fn write_beside(&self, out: &Path) -> Result<()> {
        let path = Self::sidecar(out);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn hash_ignores_wall_time_and_tracks_inputs() {
        let a = RunManifest::new("solve", json!({"n": 2}), json!({"eps": 1e-4}), 0);
        let mut b = a.clone();
        b.wall_time_s = 3.0;
        assert_eq!(a.input_sha256, RunManifest::new("solve", json!({"n": 2}), json!({"eps": 1e-4}), 0).input_sha256);
        assert_eq!(a.input_sha256, b.input_sha256);
        assert_ne!(a.input_sha256, RunManifest::new("solve", json!({"n": 3}), json!({"eps": 1e-4}), 0).input_sha256);
        assert_eq!(a.input_sha256.len(), 64);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(RunManifest::sidecar(Path::new("/tmp/r.json")), PathBuf::from("/tmp/r.json.manifest.json"));
    }
}
