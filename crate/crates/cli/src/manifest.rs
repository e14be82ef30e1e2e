use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    /// File name inside the output directory.
    pub file: String,
    pub bytes: u64,
}

impl OutputEntry {
    pub fn of(path: &Path) -> Result<Self, CliError> {
        let meta = fs::metadata(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(OutputEntry { file, bytes: meta.len() })
    }
}

/// Record of one `run`: what was run, what it produced and what to look at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// Hex SHA-256 of the config file bytes.
    pub config_hash: String,
    pub version: String,
    pub experiment: String,
    pub outputs: Vec<OutputEntry>,
    pub wall_time_s: f64,
    pub warnings: Vec<String>,
}

pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunManifest {
    pub fn new(config_bytes: &[u8], experiment: &str, outputs: Vec<OutputEntry>, wall_time_s: f64, warnings: Vec<String>) -> Self {
        RunManifest {
            config_hash: config_hash(config_bytes),
            version: env!("CARGO_PKG_VERSION").to_string(),
            experiment: experiment.to_string(),
            outputs,
            wall_time_s,
            warnings,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self)? + "\n";
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Checks every listed output against the files in `dir`.
    pub fn verify(&self, dir: &Path) -> Result<(), CliError> {
        for o in &self.outputs {
            let found = OutputEntry::of(&dir.join(&o.file))?;
            if found.bytes != o.bytes {
                return Err(CliError::Io(format!("{} has {} bytes, manifest says {}", o.file, found.bytes, o.bytes)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(config_hash(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }
}
