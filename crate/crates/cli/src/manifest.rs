//! Run manifests: what was run, with which inputs, and what it produced.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_SCHEMA: &str = "ringsense.manifest/1";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Complete,
    Partial,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    /// Relative to the manifest's directory when the file lives beneath it.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema: String,
    /// Digest of the command and resolved configuration; identical runs share it.
    pub run_id: String,
    pub timestamp: String,
    pub command: String,
    pub code_version: String,
    pub config: serde_json::Value,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

pub fn code_version() -> String {
    format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_record(path: &Path, base: &Path) -> std::io::Result<FileRecord> {
    let bytes = fs::read(path)?;
    let shown = path.strip_prefix(base).unwrap_or(path);
    Ok(FileRecord {
        path: shown.to_string_lossy().replace('\\', "/"),
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Writes `bytes` to a temporary sibling and renames it into place, so
/// readers never see a half-written file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| std::io::Error::new(std::io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        let id_source = format!("{command}\n{config}");
        Self {
            schema: MANIFEST_SCHEMA.into(),
            run_id: sha256_hex(id_source.as_bytes())[..16].to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            command: command.into(),
            code_version: code_version(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            status: RunStatus::Running,
            message: None,
        }
    }

    pub fn read(dir: &Path) -> Result<Self, String> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn add_input(&mut self, path: &Path, base: &Path) -> std::io::Result<()> {
        let rec = file_record(path, base)?;
        self.inputs.retain(|r| r.path != rec.path);
        self.inputs.push(rec);
        Ok(())
    }

    /// Records (or refreshes) an output; outputs stay sorted by path.
    pub fn add_output(&mut self, path: &Path, base: &Path) -> std::io::Result<()> {
        let rec = file_record(path, base)?;
        match self.outputs.binary_search_by(|r| r.path.cmp(&rec.path)) {
            Ok(i) => self.outputs[i] = rec,
            Err(i) => self.outputs.insert(i, rec),
        }
        Ok(())
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    /// Outputs whose contents no longer match the recorded digest.
    pub fn stale_outputs(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|r| {
                let p = dir.join(&r.path);
                fs::read(&p).map(|b| sha256_hex(&b) != r.sha256).unwrap_or(true)
            })
            .map(|r| r.path.clone())
            .collect()
    }
}
