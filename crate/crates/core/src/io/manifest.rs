//! Output manifest with SHA-256 content hashes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let data = std::fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&data)))
}

impl Manifest {
    /// Hashes `files` (inside `dir`), sorted by relative path.
    pub fn build(dir: &Path, files: &[PathBuf]) -> Result<Self> {
        let mut entries = files
            .iter()
            .map(|f| {
                let rel = f
                    .strip_prefix(dir)
                    .map_err(|_| Error::InvalidInput(format!("{} is outside {}", f.display(), dir.display())))?;
                Ok(ManifestEntry {
                    path: rel.to_string_lossy().replace('\\', "/"),
                    bytes: std::fs::metadata(f)?.len(),
                    sha256: sha256_file(f)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        entries.sort_by(|a, b| a.path.cmp(&b.path));
        entries.dedup_by(|a, b| a.path == b.path);
        Ok(Manifest { entries })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Paths whose current hash differs from the recorded one.
    pub fn verify(&self, dir: &Path) -> Result<Vec<String>> {
        let mut bad = Vec::new();
        for e in &self.entries {
            let p = dir.join(&e.path);
            if !p.exists() || sha256_file(&p)? != e.sha256 {
                bad.push(e.path.clone());
            }
        }
        Ok(bad)
    }
}
