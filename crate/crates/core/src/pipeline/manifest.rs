//! Run manifests: config hash, stage timings and a checksum of every file
//! a run wrote.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Ok,
    /// Ran to completion but missed its tolerance.
    Failed,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub name: String,
    pub status: StageStatus,
    pub seconds: f64,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FileRecord {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub stages: Vec<StageRecord>,
    pub files: Vec<FileRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, canonical_config: &str) -> RunManifest {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: sha256_hex(canonical_config.as_bytes()),
            config: serde_json::from_str(canonical_config).unwrap_or(serde_json::Value::Null),
            stages: Vec::new(),
            files: Vec::new(),
        }
    }

    /// Times `f` and records it as stage `name`. `Ok(false)` marks a
    /// completed stage that missed its tolerance.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<(T, bool)>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        let seconds = start.elapsed().as_secs_f64();
        let (status, message) = match &out {
            Ok((_, true)) => (StageStatus::Ok, None),
            Ok((_, false)) => (StageStatus::Failed, Some("tolerance not met".to_string())),
            Err(e) => (StageStatus::Error, Some(e.to_string())),
        };
        log::info!("stage {name}: {status:?} in {seconds:.3} s");
        self.stages.push(StageRecord { name: name.into(), status, seconds, message });
        out.map(|(v, _)| v)
    }

    pub fn all_ok(&self) -> bool {
        self.stages.iter().all(|s| s.status == StageStatus::Ok)
    }

    /// Lists every file under `dir` (except the manifest itself) and
    /// writes `manifest.json` there.
    pub fn finish(&mut self, dir: &Path) -> Result<PathBuf> {
        let mut files = Vec::new();
        collect_files(dir, dir, &mut files)?;
        files.sort_by(|a, b| a.path.cmp(&b.path));
        self.files = files;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<FileRecord>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let path = entry.path();
        if entry.file_type()?.is_dir() {
            collect_files(root, &path, out)?;
            continue;
        }
        let rel = path.strip_prefix(root).expect("inside root");
        if rel == Path::new(MANIFEST_FILE) {
            continue;
        }
        let bytes = fs::read(&path)?;
        out.push(FileRecord {
            path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
