//! Run manifest: per-cell status for resumable sweeps, written atomically.

use dpre_core::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Pending,
    Running,
    Done,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellEntry {
    pub index: usize,
    pub status: CellStatus,
    pub artifact: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub cells: Vec<CellEntry>,
}

impl RunManifest {
    pub fn new(config_hash: &str, n_cells: usize) -> Self {
        Self {
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            cells: (0..n_cells)
                .map(|index| CellEntry {
                    index,
                    status: CellStatus::Pending,
                    artifact: None,
                })
                .collect(),
        }
    }

    pub fn path(dir: &Path) -> PathBuf {
        dir.join("manifest.json")
    }

    pub fn load(dir: &Path) -> Result<Option<Self>> {
        let path = Self::path(dir);
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Domain(format!("cannot read manifest: {e}")))?;
        let manifest = serde_json::from_str(&text)
            .map_err(|e| Error::Domain(format!("corrupt manifest: {e}")))?;
        Ok(Some(manifest))
    }

    /// Atomic persist: write to a temporary file, then rename into place,
    /// so an interrupted run never leaves a torn manifest.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let tmp = dir.join("manifest.json.tmp");
        let body = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Numerical(format!("manifest serialization: {e}")))?;
        fs::write(&tmp, body).map_err(|e| Error::Domain(format!("cannot write manifest: {e}")))?;
        fs::rename(&tmp, Self::path(dir))
            .map_err(|e| Error::Domain(format!("cannot commit manifest: {e}")))?;
        Ok(())
    }

    pub fn all_done(&self) -> bool {
        self.cells.iter().all(|c| c.status == CellStatus::Done)
    }
}

/// Atomic file write for artifacts (same write-then-rename discipline).
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| Error::Domain(format!("cannot write {path:?}: {e}")))?;
    fs::rename(&tmp, path).map_err(|e| Error::Domain(format!("cannot commit {path:?}: {e}")))?;
    Ok(())
}
