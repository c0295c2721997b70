//! Checkpoint files.
//!
//! ```text
//! RNNGLAB-CKPT 1\n
//! {single-line JSON header}\n
//! parameter data: little-endian f64
//! ```
//!
//! The header holds the format version, architecture tag, full model spec,
//! vocabulary, nonterminal labels, a hash of the two, provenance, and the
//! name and shape of every parameter. Parameter data follows in the
//! header's order, which is the model's registration order, each tensor
//! row-major.

use std::path::Path;

use rnnglab_core::models::{AnyModel, ModelSpec};
use rnnglab_core::treebank::{Inventory, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fsio;
use crate::provenance::Provenance;

pub const MAGIC: &str = "RNNGLAB-CKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub architecture: String,
    pub spec: ModelSpec,
    pub vocabulary: Vocabulary,
    pub labels: Inventory,
    pub vocab_hash: String,
    pub provenance: Provenance,
    pub params: Vec<ParamInfo>,
}

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub model: AnyModel,
    pub vocabulary: Vocabulary,
    pub labels: Inventory,
    pub provenance: Provenance,
}

/// Hash identifying a vocabulary/label pair.
pub fn vocab_hash(vocabulary: &Vocabulary, labels: &Inventory) -> String {
    let bytes = serde_json::to_vec(&(vocabulary, labels)).expect("vocabularies serialize");
    fsio::sha256_hex(&bytes)
}

impl Checkpoint {
    pub fn vocab_hash(&self) -> String {
        vocab_hash(&self.vocabulary, &self.labels)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let params = self.model.params();
        let header = Header {
            format_version: FORMAT_VERSION,
            architecture: self.model.architecture().tag().into(),
            spec: self.model.spec().clone(),
            vocabulary: self.vocabulary.clone(),
            labels: self.labels.clone(),
            vocab_hash: self.vocab_hash(),
            provenance: self.provenance.clone(),
            params: params.iter().map(|(_, name, t)| ParamInfo { name: name.into(), shape: t.shape().dims() }).collect(),
        };
        let mut out = format!("{MAGIC} {FORMAT_VERSION}\n").into_bytes();
        out.extend(serde_json::to_vec(&header).expect("headers serialize"));
        out.push(b'\n');
        for v in params.flat_values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Checkpoint> {
        let bad = |m: String| LabError::format(path, m);
        let mut lines = bytes.splitn(3, |&b| b == b'\n');
        let magic = lines.next().unwrap_or_default();
        let expected = format!("{MAGIC} {FORMAT_VERSION}");
        if magic != expected.as_bytes() {
            return Err(bad(format!("not a checkpoint (first line should be `{expected}`)")));
        }
        let header_line = lines.next().ok_or_else(|| bad("missing header".into()))?;
        let header: Header = serde_json::from_slice(header_line).map_err(|e| bad(format!("bad header: {e}")))?;
        let data = lines.next().unwrap_or_default();
        if header.format_version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {}", header.format_version)));
        }
        let found = vocab_hash(&header.vocabulary, &header.labels);
        if found != header.vocab_hash {
            return Err(LabError::Provenance { what: format!("vocabulary of {}", path.display()), expected: header.vocab_hash, found });
        }
        if header.spec.architecture.tag() != header.architecture {
            return Err(bad(format!("architecture `{}` disagrees with spec", header.architecture)));
        }
        if header.spec.vocab_size != header.vocabulary.len() || header.spec.labels != header.labels.len() {
            return Err(bad("model dimensions disagree with the stored vocabulary".into()));
        }
        let mut model = AnyModel::new(header.spec.clone());
        let layout: Vec<ParamInfo> =
            model.params().iter().map(|(_, name, t)| ParamInfo { name: name.into(), shape: t.shape().dims() }).collect();
        if layout != header.params {
            return Err(bad("parameter layout does not match the architecture".into()));
        }
        let numel = model.params().numel();
        if data.len() != numel * 8 {
            return Err(bad(format!("expected {} bytes of parameters, found {}", numel * 8, data.len())));
        }
        let values: Vec<f64> = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
        model.params_mut().load_flat(&values).map_err(|n| bad(format!("parameter count mismatch ({n})")))?;
        Ok(Checkpoint { model, vocabulary: header.vocabulary, labels: header.labels, provenance: header.provenance })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fsio::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        Self::from_bytes(&fsio::read(path)?, path)
    }
}
