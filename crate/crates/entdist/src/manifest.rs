//! Per-run bookkeeping: what was run, with which inputs, and what it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::RunError;
use crate::formats::{from_json, to_json};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub artifact: String,
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub scenario_sha256: String,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub files: Vec<FileEntry>,
}

/// A file produced by a run, not yet written.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: &'static str,
    pub file_name: String,
    pub contents: Vec<u8>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn timestamp(t: DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Writes every artifact under `out_dir` and returns their manifest entries.
pub fn write_artifacts(out_dir: &Path, artifacts: &[Artifact]) -> Result<Vec<FileEntry>, RunError> {
    fs::create_dir_all(out_dir)?;
    artifacts
        .iter()
        .map(|a| {
            fs::write(out_dir.join(&a.file_name), &a.contents)?;
            Ok(FileEntry {
                artifact: a.name.to_owned(),
                path: a.file_name.clone(),
                bytes: a.contents.len() as u64,
                sha256: sha256_hex(&a.contents),
            })
        })
        .collect()
}

impl RunManifest {
    pub fn write(&self, out_dir: &Path) -> Result<PathBuf, RunError> {
        let path = out_dir.join(MANIFEST_FILE);
        fs::write(&path, to_json(self))?;
        Ok(path)
    }

    pub fn read(out_dir: &Path) -> Result<Self, RunError> {
        from_json(&fs::read(out_dir.join(MANIFEST_FILE))?)
    }

    /// Paths of listed files whose contents no longer match their checksum.
    pub fn verify(&self, out_dir: &Path) -> Result<Vec<String>, RunError> {
        let mut bad = Vec::new();
        for f in &self.files {
            let bytes = fs::read(out_dir.join(&f.path))?;
            if sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes {
                bad.push(f.path.clone());
            }
        }
        Ok(bad)
    }
}
