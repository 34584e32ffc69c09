use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;
use crate::store::{write_atomic, MANIFEST_FILE};

/// SHA-256 of the scenario text, hex encoded.
pub fn spec_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Passed,
    Failed,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub spec_hash: String,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub status: RunStatus,
    pub checks: Vec<CheckOutcome>,
    /// Paths relative to the run directory.
    pub artifacts: Vec<String>,
}

impl RunManifest {
    /// 0 when every check passed, 1 on a failed check, 3 after a solver abort.
    pub fn exit_code(&self) -> i32 {
        match self.status {
            RunStatus::Passed => 0,
            RunStatus::Failed => 1,
            RunStatus::Aborted => 3,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), HarnessError> {
        let json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        write_atomic(&dir.join(MANIFEST_FILE), &json)
    }

    pub fn read(dir: &Path) -> Result<Self, HarnessError> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = std::fs::read(&path).map_err(|e| HarnessError::io(&path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
    }
}
