//! Staged artifact writing and the result manifest.
//!
//! Artifacts go to a staging directory first and are moved into the output
//! directory only when the experiment finishes, so a failed run never
//! leaves truncated files behind, only a failure manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Success,
    ThresholdFailure,
    Error,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultManifest {
    pub experiment: String,
    pub status: Status,
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub files: Vec<FileEntry>,
    pub metrics: BTreeMap<String, f64>,
    /// Metrics outside their acceptance band.
    pub failed_thresholds: Vec<String>,
    pub error: Option<String>,
}

/// Collects the files of one run under a staging directory.
pub struct Artifacts {
    staging: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(out: &Path) -> Result<Self> {
        fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        let staging = out.join(format!(".staging-{}", std::process::id()));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir_all(&staging)?;
        Ok(Artifacts { staging, files: Vec::new() })
    }

    /// Writes `rel` through `f`.
    pub fn write(&mut self, rel: &str, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
        let path = self.staging.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let mut w = BufWriter::new(fs::File::create(&path)?);
        f(&mut w).with_context(|| format!("writing {rel}"))?;
        w.flush()?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(rel, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Moves every staged file into `out` and returns their checksums, in
    /// the order they were written.
    pub fn commit(self, out: &Path) -> Result<Vec<FileEntry>> {
        let mut entries = Vec::with_capacity(self.files.len());
        for rel in &self.files {
            let from = self.staging.join(rel);
            let to = out.join(rel);
            if let Some(dir) = to.parent() {
                fs::create_dir_all(dir)?;
            }
            let bytes = fs::read(&from)?;
            entries.push(FileEntry { path: rel.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
            fs::rename(&from, &to).with_context(|| format!("moving {rel} into place"))?;
        }
        fs::remove_dir_all(&self.staging)?;
        Ok(entries)
    }

    pub fn discard(self) {
        let _ = fs::remove_dir_all(&self.staging);
    }
}

/// Writes the manifest through a temporary file and a rename.
pub fn write_manifest(out: &Path, manifest: &ResultManifest) -> Result<()> {
    fs::create_dir_all(out)?;
    let tmp = out.join(format!(".{MANIFEST}.tmp"));
    fs::write(&tmp, serde_json::to_string_pretty(manifest)? + "\n")?;
    fs::rename(&tmp, out.join(MANIFEST))?;
    Ok(())
}
