//! Run manifests and the content-addressed result cache.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "SPECTRAL_LAB_CACHE";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub index: usize,
    pub label: String,
    /// `"ok"` or the error kind.
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Effective arguments after config expansion, for replay.
    pub argv: Vec<String>,
    /// Full parameter echo.
    pub params: serde_json::Value,
    pub tool_version: String,
    /// SHA-256 of the canonical parameter JSON and any input files.
    pub input_hash: String,
    pub output: String,
    pub output_sha256: String,
    pub wall_time_s: f64,
    /// `"off"`, `"hit"` or `"miss"`.
    pub cache: String,
    pub jobs: Vec<JobStatus>,
}

/// Where the manifest of `out` lives.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheMeta {
    output_sha256: String,
    jobs: Vec<JobStatus>,
}

/// Result cache keyed by the input hash, under `$SPECTRAL_LAB_CACHE`.
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn from_env() -> Option<Self> {
        std::env::var_os(CACHE_ENV).filter(|d| !d.is_empty()).map(|d| Self { dir: PathBuf::from(d) })
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        (self.dir.join(format!("{key}.out")), self.dir.join(format!("{key}.json")))
    }

    /// Stored output and job list, only if the bytes still hash to the recorded value.
    pub fn get(&self, key: &str) -> Option<(Vec<u8>, Vec<JobStatus>)> {
        let (out, meta) = self.paths(key);
        let meta: CacheMeta = serde_json::from_slice(&fs::read(meta).ok()?).ok()?;
        let bytes = fs::read(out).ok()?;
        (sha256_hex(&bytes) == meta.output_sha256).then_some((bytes, meta.jobs))
    }

    pub fn put(&self, key: &str, bytes: &[u8], jobs: &[JobStatus]) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let (out, meta) = self.paths(key);
        fs::write(out, bytes)?;
        let meta_json = serde_json::to_vec(&CacheMeta { output_sha256: sha256_hex(bytes), jobs: jobs.to_vec() })?;
        fs::write(meta, meta_json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_next_to_output() {
        assert_eq!(manifest_path(Path::new("/tmp/a/trace.csv")), PathBuf::from("/tmp/a/trace.csv.manifest.json"));
    }
}
