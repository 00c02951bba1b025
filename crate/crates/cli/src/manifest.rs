//! Run manifests: config echo, scales, seeds and a checksummed inventory
//! of every emitted file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ptrmt::ensembles::ScalesReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Seeds used by one cell. Draw `k` uses
/// `sample_seed(master_seed, k, seed_tag)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSeeds {
    pub cell: String,
    pub seed_tag: u64,
    pub n_samples: usize,
    pub first_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    /// SHA-256 over `blob <len>\0` followed by the contents, as git does.
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub scales: Option<ScalesReport>,
    pub started: String,
    pub finished: String,
    pub wall_seconds: f64,
    pub seeds: Vec<CellSeeds>,
    pub outputs: Vec<OutputFile>,
    /// Cells that failed, with their error messages.
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text).map_err(|e| {
            CliError::Config(crate::error::ConfigError::new(path.display().to_string(), format!("bad manifest: {e}")))
        })
    }

    /// Files in the inventory whose contents under `dir` no longer match.
    pub fn verify(&self, dir: &Path) -> Vec<String> {
        self.outputs
            .iter()
            .filter(|f| match fs::read(dir.join(&f.path)) {
                Ok(bytes) => blob_sha256(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes,
                Err(_) => true,
            })
            .map(|f| f.path.clone())
            .collect()
    }
}

/// Git-style blob hash in hex.
pub fn blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let io = |source| CliError::Io { path: path.clone(), source };
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, &path).map_err(io)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git_sha256_format() {
        // printf 'hello\n' | git hash-object --object-format=sha256 --stdin
        assert_eq!(
            blob_sha256(b"hello\n"),
            "2cf8d83d9ee29543b34a87727421fdecb7e3f3a183d337639025de576db9ebb4"
        );
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "a.txt", b"x").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("a.txt")]);
    }
}
