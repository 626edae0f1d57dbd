//! Run manifests and the file sink that records every emitted artifact.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RunError;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub version: String,
    pub zeta_profile: String,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub config: serde_json::Value,
    pub summary: serde_json::Value,
    pub files: Vec<FileRecord>,
}

impl RunManifest {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn file(&self, name: &str) -> Option<&FileRecord> {
        self.files.iter().find(|f| f.name == name)
    }

    pub fn read(dir: &Path) -> Result<Self, RunError> {
        let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
        serde_json::from_str(&text).map_err(|e| RunError::Io(e.to_string()))
    }
}

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes files into one output directory and records their hashes.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileRecord>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|e| {
            RunError::config("out_dir", &format!("{}: {e}", dir.display()))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn into_files(self) -> Vec<FileRecord> {
        self.files
    }

    pub fn bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.retain(|f| f.name != name);
        self.files.push(FileRecord {
            name: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Writes a headed CSV table.
    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), RunError>
    where
        R: IntoIterator<Item = I>,
        I: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(row)?;
        }
        let bytes = w.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
        self.bytes(name, &bytes)
    }
}

/// Shortest round-trip decimal form of a float.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
