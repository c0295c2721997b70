use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fsio;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Where an output came from. Embedded in every file the tool writes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    /// Input label → SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Self {
        let canonical = serde_json::to_vec(config).expect("configs serialize");
        Provenance {
            tool: "rnnglab".into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            config_hash: fsio::sha256_hex(&canonical),
            seed,
            inputs: BTreeMap::new(),
        }
    }

    pub fn with_input(mut self, label: &str, path: &Path) -> Result<Self> {
        self.inputs.insert(label.into(), fsio::hash_file(path)?);
        Ok(self)
    }

    pub fn with_input_hash(mut self, label: &str, hash: String) -> Self {
        self.inputs.insert(label.into(), hash);
        self
    }

    /// `# key: value` lines for text outputs.
    pub fn header_lines(&self) -> String {
        let mut s = format!(
            "# tool: {} {}\n# command: {}\n# config_hash: {}\n# seed: {}\n",
            self.tool, self.version, self.command, self.config_hash, self.seed
        );
        for (k, v) in &self.inputs {
            s.push_str(&format!("# input {k}: {v}\n"));
        }
        s
    }
}
