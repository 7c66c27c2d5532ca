use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ReportError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Pf,
    Modal,
    Sim,
}

/// Written as `manifest.json` next to every output set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub case_path: String,
    pub command: Command,
    pub options: BTreeMap<String, String>,
    pub output_dir: String,
    pub tool_version: String,
    /// SHA-256 of the case text, lowercase hex.
    pub case_sha256: String,
    /// Files written by the run, relative to `output_dir`.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(case_path: &str, case_text: &str, command: Command, output_dir: &str) -> Self {
        RunManifest {
            case_path: case_path.to_string(),
            command,
            options: BTreeMap::new(),
            output_dir: output_dir.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            case_sha256: sha256_hex(case_text.as_bytes()),
            outputs: Vec::new(),
        }
    }

    pub fn option(mut self, key: &str, value: impl ToString) -> Self {
        self.options.insert(key.to_string(), value.to_string());
        self
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self, ReportError> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}
