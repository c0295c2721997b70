//! `train`: fits a model on a prepared corpus and writes a checkpoint plus
//! a JSON-lines log.

use std::path::{Path, PathBuf};

use log::info;
use rnnglab_core::models::{build_examples, train, EpochRecord, TrainConfig, TrainReport, TrainStatus};
use rnnglab_core::numcore::{OptimizerConfig, OptimizerKind};
use rnnglab_core::{AnyModel, Architecture, ModelSpec};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checkpoint::Checkpoint;
use crate::corpus::{Prepared, MANIFEST};
use crate::error::{LabError, Result};
use crate::fsio;
use crate::provenance::Provenance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    /// Directory written by `prepare`.
    pub corpus: Option<PathBuf>,
    /// Expected SHA-256 of the corpus manifest.
    pub manifest_hash: Option<String>,
    pub architecture: Architecture,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub layers: usize,
    pub dropout: f64,
    pub seed: u64,
    pub max_epochs: usize,
    pub patience: usize,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    /// Gradient-norm clip; 0 disables it.
    pub clip_norm: f64,
    pub decay: f64,
    /// Use only the first n training sentences.
    pub max_train_sentences: Option<usize>,
    pub out: PathBuf,
    /// Defaults to the checkpoint path with `.log.jsonl` appended.
    pub log: Option<PathBuf>,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let o = OptimizerConfig::default();
        let t = TrainConfig::default();
        TrainSettings {
            corpus: None,
            manifest_hash: None,
            architecture: Architecture::Rnng,
            embed_dim: 256,
            hidden_dim: 256,
            layers: 2,
            dropout: 0.3,
            seed: 1,
            max_epochs: t.max_epochs,
            patience: t.patience,
            optimizer: o.kind,
            learning_rate: o.learning_rate,
            clip_norm: o.clip_norm.unwrap_or(0.0),
            decay: o.decay,
            max_train_sentences: None,
            out: PathBuf::from("model.ckpt"),
            log: None,
        }
    }
}

impl TrainSettings {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            patience: self.patience,
            seed: self.seed,
            optimizer: OptimizerConfig {
                kind: self.optimizer,
                learning_rate: self.learning_rate,
                clip_norm: (self.clip_norm > 0.0).then_some(self.clip_norm),
                decay: self.decay,
                ..OptimizerConfig::default()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.layers == 0 {
            return Err(LabError::Usage("dimensions and layers must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(LabError::Usage("dropout must be in [0, 1)".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(LabError::Usage("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

fn log_path(settings: &TrainSettings) -> PathBuf {
    match &settings.log {
        Some(p) => fsio::resolve(p),
        None => {
            let mut s = fsio::resolve(&settings.out).into_os_string();
            s.push(".log.jsonl");
            PathBuf::from(s)
        }
    }
}

/// Runs `train`. A diverged run still saves the best parameters, then
/// reports a numerical error.
pub fn run(settings: &TrainSettings) -> Result<(Checkpoint, TrainReport)> {
    settings.validate()?;
    let dir = fsio::resolve(settings.corpus.as_deref().ok_or_else(|| LabError::Usage("--corpus is required".into()))?);
    let prepared = Prepared::load(&dir)?;
    if let Some(expected) = &settings.manifest_hash {
        if *expected != prepared.manifest_hash {
            return Err(LabError::Provenance {
                what: dir.join(MANIFEST).display().to_string(),
                expected: expected.clone(),
                found: prepared.manifest_hash.clone(),
            });
        }
    }
    let provenance = Provenance::new("train", settings, settings.seed).with_input_hash("manifest", prepared.manifest_hash.clone());
    let n = settings.max_train_sentences.unwrap_or(usize::MAX).min(prepared.train.len());
    let train_ex = build_examples(&prepared.train[..n], &prepared.vocabulary, &prepared.labels)?;
    let dev_ex = build_examples(&prepared.dev, &prepared.vocabulary, &prepared.labels)?;

    let spec = ModelSpec {
        layers: settings.layers,
        dropout: settings.dropout,
        seed: settings.seed,
        ..ModelSpec::new(settings.architecture, prepared.vocabulary.len(), prepared.labels.len()).with_dims(settings.embed_dim, settings.hidden_dim)
    };
    let mut model = AnyModel::new(spec);
    let log_file = log_path(settings);
    let mut lines = vec![json!({ "provenance": provenance }).to_string()];
    let mut io_error = None;
    let report = train(&mut model, &train_ex, &dev_ex, &settings.train_config(), |r: &EpochRecord| {
        info!("epoch {} train ppl {:.3} dev ppl {:.3} lr {}", r.epoch, r.train_ppl, r.dev_ppl, r.lr);
        lines.push(serde_json::to_string(r).expect("records serialize"));
        if io_error.is_none() {
            io_error = write_lines(&log_file, &lines).err();
        }
    })?;
    if let Some(e) = io_error {
        return Err(e);
    }
    lines.push(json!({ "report": { "best_epoch": report.best_epoch, "best_dev_ppl": report.best_dev_ppl, "status": report.status } }).to_string());
    write_lines(&log_file, &lines)?;

    let ckpt = Checkpoint { model, vocabulary: prepared.vocabulary, labels: prepared.labels, provenance };
    ckpt.save(&fsio::resolve(&settings.out))?;
    if let TrainStatus::Diverged { epoch, reason } = &report.status {
        return Err(LabError::Numeric(format!(
            "training diverged in epoch {epoch} ({reason}); kept parameters of epoch {}",
            report.best_epoch
        )));
    }
    Ok((ckpt, report))
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut s = lines.join("\n");
    s.push('\n');
    fsio::write_atomic(path, s.as_bytes())
}
