//! Run manifests: everything needed to regenerate a run's outputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    pub boots: usize,
    /// SHA-256 of the canonical JSON of the result-determining configuration.
    pub config_hash: String,
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input_sha256: Option<String>,
    pub outputs: Vec<OutputFile>,
    pub details: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    Ok(sha256_hex(serde_json::to_string(config)?.as_bytes()))
}

/// Collects output files written into one directory.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<OutputFile>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(OutputFile {
            file: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    /// Serializes `rows` as CSV with a header derived from the row type.
    pub fn write_csv<T: Serialize>(
        &mut self,
        name: &str,
        rows: impl IntoIterator<Item = T>,
    ) -> Result<PathBuf> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in rows {
            writer.serialize(row)?;
        }
        let bytes = writer
            .into_inner()
            .map_err(|e| CliError::io(self.path(name), e.into_error()))?;
        self.write(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn outputs(&self) -> &[OutputFile] {
        &self.written
    }

    /// Writes `manifest.json`; the manifest does not list itself.
    pub fn finish(self, mut manifest: Manifest) -> Result<PathBuf> {
        manifest.outputs = self.written;
        let path = self.root.join("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}
