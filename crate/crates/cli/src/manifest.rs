//! `manifest.json`: every file a run wrote, with its SHA-256, plus the
//! config hash, seed and tool versions. No timestamps, so identical runs give
//! identical manifests.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub seed: u64,
    pub config_sha256: String,
    pub versions: Versions,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub fraclevy: String,
    pub cli: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            fraclevy: fraclevy::VERSION.to_owned(),
            cli: env!("CARGO_PKG_VERSION").to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory, '/'-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    pub fn of(path: &str, body: &[u8]) -> Self {
        Self {
            path: path.to_owned(),
            sha256: sha256_hex(body),
            bytes: body.len() as u64,
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads `dir/manifest.json`; the error names the missing file.
pub fn read(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST);
    if !path.is_file() {
        anyhow::bail!("{} not found: {} is not a run directory", path.display(), dir.display());
    }
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "problem", rename_all = "snake_case")]
pub enum Finding {
    Missing { path: String },
    Changed { path: String, expected: String, actual: String },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::Missing { path } => write!(f, "{path}: missing"),
            Finding::Changed { path, expected, actual } => {
                write!(f, "{path}: sha256 {actual} does not match the manifest ({expected})")
            }
        }
    }
}

/// Rehashes every listed file. An empty result means the run is intact.
pub fn audit(dir: &Path) -> Result<Vec<Finding>> {
    let m = read(dir)?;
    let mut out = Vec::new();
    for e in &m.files {
        match std::fs::read(dir.join(&e.path)) {
            Err(_) => out.push(Finding::Missing { path: e.path.clone() }),
            Ok(body) => {
                let actual = sha256_hex(&body);
                if actual != e.sha256 {
                    out.push(Finding::Changed {
                        path: e.path.clone(),
                        expected: e.sha256.clone(),
                        actual,
                    });
                }
            }
        }
    }
    Ok(out)
}
