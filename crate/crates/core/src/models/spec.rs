use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::action::{ActionSpace, MAX_ACTIONS, MAX_OPEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    LstmLm,
    ActionLstm,
    Rnng,
}

impl Architecture {
    pub const ALL: [Architecture; 3] = [Architecture::LstmLm, Architecture::ActionLstm, Architecture::Rnng];

    pub fn tag(self) -> &'static str {
        match self {
            Architecture::LstmLm => "lstm-lm",
            Architecture::ActionLstm => "action-lstm",
            Architecture::Rnng => "rnng",
        }
    }

    /// Whether the model generates trees and needs beam search for surprisal.
    pub fn is_structural(self) -> bool {
        self != Architecture::LstmLm
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = alloc::string::String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| alloc::format!("unknown architecture `{s}` (expected lstm-lm, action-lstm or rnng)"))
    }
}

/// Everything needed to rebuild a model's parameter layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub vocab_size: usize,
    pub labels: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub dropout: f64,
    pub max_open: usize,
    pub max_actions: usize,
    pub seed: u64,
}

impl ModelSpec {
    /// Full-size defaults: 2 layers of 256 units, embeddings of 256, dropout 0.3.
    pub fn new(architecture: Architecture, vocab_size: usize, labels: usize) -> Self {
        ModelSpec {
            architecture,
            vocab_size,
            labels,
            embed_dim: 256,
            hidden_dim: 256,
            layers: 2,
            dropout: 0.3,
            max_open: MAX_OPEN,
            max_actions: MAX_ACTIONS,
            seed: 1,
        }
    }

    pub fn with_dims(mut self, embed_dim: usize, hidden_dim: usize) -> Self {
        self.embed_dim = embed_dim;
        self.hidden_dim = hidden_dim;
        self
    }

    pub fn space(&self) -> ActionSpace {
        ActionSpace { labels: self.labels, vocab: self.vocab_size, max_open: self.max_open, max_actions: self.max_actions }
    }
}
