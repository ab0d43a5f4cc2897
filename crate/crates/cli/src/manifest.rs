//! `manifest.json` in the output directory: one entry per stage with the
//! hashes of what it read and wrote. No timestamps, so identical runs give
//! identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub stages: BTreeMap<String, StageRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub inputs: BTreeMap<String, FileRecord>,
    pub params: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory of a run. Every write goes through here, so nothing
/// lands outside it.
pub struct OutDir {
    root: PathBuf,
    record: StageRecord,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|source| CliError::Io { path: root.to_path_buf(), source })?;
        Ok(OutDir { root: root.to_path_buf(), record: StageRecord::default() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Read an explicit input, or the artifact `name` that `stage` leaves in
    /// the output directory.
    pub fn read_input(&mut self, key: &str, explicit: Option<&Path>, name: &str, stage: &'static str) -> Result<Vec<u8>> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None => {
                let p = self.path(name);
                if !p.exists() {
                    return Err(CliError::Dependency { path: p, stage });
                }
                p
            }
        };
        self.read_file(key, &path)
    }

    pub fn read_file(&mut self, key: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        let shown = path.strip_prefix(&self.root).unwrap_or(path);
        self.record.inputs.insert(
            key.to_string(),
            FileRecord { path: shown.display().to_string(), sha256: sha256_hex(&bytes) },
        );
        Ok(bytes)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        self.record.outputs.insert(name.to_string(), sha256_hex(bytes));
        log::info!("wrote {name} ({} bytes)", bytes.len());
        Ok(())
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.record.params.insert(key.to_string(), value.to_string());
    }

    /// Store this stage's record in the manifest, replacing any earlier run
    /// of the same stage.
    pub fn finish(self, stage: &str) -> Result<()> {
        let path = self.path(MANIFEST);
        let mut manifest = match std::fs::read_to_string(&path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Manifest {
                tool: "handwave".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                stages: BTreeMap::new(),
            },
            Err(source) => return Err(CliError::Io { path, source }),
        };
        manifest.stages.insert(stage.to_string(), self.record);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest is plain data");
        text.push('\n');
        std::fs::write(&path, text).map_err(|source| CliError::Io { path, source })
    }
}
