//! Stage outputs and their manifests.
//!
//! Every stage writes `<stage>.stage.json` next to its outputs, recording a
//! digest of everything it read (config keys, upstream outputs, corpus
//! files) and a digest of every file it wrote. A stage is current when its
//! recorded input digest matches a fresh computation and its outputs are
//! unmodified.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::stages::Stage;
use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageManifest {
    pub stage: String,
    pub inputs: String,
    /// Output path relative to the output directory, and its digest.
    pub outputs: BTreeMap<String, String>,
}

/// Accumulates what a stage reads into one digest.
#[derive(Default)]
pub struct InputDigest(Sha256);

impl InputDigest {
    pub fn add(&mut self, label: &str, bytes: &[u8]) {
        self.0.update((label.len() as u64).to_le_bytes());
        self.0.update(label.as_bytes());
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

pub struct Store {
    pub root: PathBuf,
}

impl Store {
    pub fn new(root: &Path) -> Self {
        Store {
            root: root.to_path_buf(),
        }
    }

    fn manifest_path(&self, stage: Stage) -> PathBuf {
        self.root.join(format!("{}.stage.json", stage.name()))
    }

    pub fn manifest(&self, stage: Stage) -> Option<StageManifest> {
        let text = fs::read_to_string(self.manifest_path(stage)).ok()?;
        serde_json::from_str(&text).ok()
    }

    /// Read an output of `stage`, checking it against the manifest.
    pub fn read(&self, stage: Stage, name: &str) -> Result<Vec<u8>, CliError> {
        let manifest = self.manifest(stage).ok_or(CliError::Missing(stage))?;
        let expected = manifest.outputs.get(name).ok_or(CliError::Missing(stage))?;
        let bytes = fs::read(self.root.join(name)).map_err(|_| CliError::Missing(stage))?;
        if sha256_hex(&bytes) != *expected {
            return Err(CliError::Stale {
                stage,
                reason: format!("{name} was modified after the stage ran"),
            });
        }
        Ok(bytes)
    }

    pub fn read_json<T: for<'de> Deserialize<'de>>(
        &self,
        stage: Stage,
        name: &str,
    ) -> Result<T, CliError> {
        let bytes = self.read(stage, name)?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Stale {
            stage,
            reason: format!("{name}: {e}"),
        })
    }

    /// Write all outputs of a stage, then its manifest. Outputs of an
    /// earlier run of the stage that are not rewritten are removed.
    pub fn commit(
        &self,
        stage: Stage,
        inputs: String,
        outputs: &BTreeMap<String, Vec<u8>>,
    ) -> anyhow::Result<()> {
        if let Some(old) = self.manifest(stage) {
            for name in old.outputs.keys() {
                if !outputs.contains_key(name) {
                    let _ = fs::remove_file(self.root.join(name));
                }
            }
        }
        let _ = fs::remove_file(self.manifest_path(stage));
        let mut digests = BTreeMap::new();
        for (name, bytes) in outputs {
            let path = self.root.join(name);
            if let Some(dir) = path.parent() {
                fs::create_dir_all(dir)?;
            }
            fs::write(&path, bytes)?;
            digests.insert(name.clone(), sha256_hex(bytes));
        }
        let manifest = StageManifest {
            stage: stage.name().into(),
            inputs,
            outputs: digests,
        };
        fs::create_dir_all(&self.root)?;
        fs::write(
            self.manifest_path(stage),
            serde_json::to_string_pretty(&manifest)? + "\n",
        )?;
        Ok(())
    }
}
