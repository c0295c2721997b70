//! Per-token surprisal for test suites.

use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use rnnglab_core::decode::{self, BeamConfig, DecodeError};
use rnnglab_core::{AnyModel, SurprisalRecord, TestSuite, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{LabError, Result};
use crate::fsio;
use crate::provenance::Provenance;
use crate::records;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSettings {
    pub checkpoint: Option<PathBuf>,
    pub suites: Vec<PathBuf>,
    /// Model tag written to the table; defaults to the architecture.
    pub model_name: Option<String>,
    pub out: PathBuf,
    pub action_beam_size: usize,
    pub word_beam_size: usize,
    pub max_structural_actions: usize,
    pub retry_factor: usize,
    pub early_stop: bool,
    /// Threads; 0 lets rayon decide.
    pub workers: usize,
}

impl Default for ScoreSettings {
    fn default() -> Self {
        let b = BeamConfig::default();
        ScoreSettings {
            checkpoint: None,
            suites: Vec::new(),
            model_name: None,
            out: PathBuf::from("surprisal.tsv"),
            action_beam_size: b.action_beam_size,
            word_beam_size: b.word_beam_size,
            max_structural_actions: b.max_structural_actions,
            retry_factor: b.retry_factor,
            early_stop: b.early_stop,
            workers: 0,
        }
    }
}

impl ScoreSettings {
    pub fn beam(&self) -> BeamConfig {
        BeamConfig {
            action_beam_size: self.action_beam_size,
            word_beam_size: self.word_beam_size,
            max_structural_actions: self.max_structural_actions,
            early_stop: self.early_stop,
            retry_factor: self.retry_factor,
        }
    }
}

pub fn load_suite(path: &Path) -> Result<TestSuite> {
    let path = fsio::resolve(path);
    let text = fsio::read_text(&path)?;
    let suite: TestSuite = serde_json::from_str(&text).map_err(|e| LabError::format(&path, e))?;
    suite.validate().map_err(|e| LabError::format(&path, e))?;
    Ok(suite)
}

/// Surprisals of one sentence, in bits.
pub fn sentence_surprisal(model: &AnyModel, vocab: &Vocabulary, tokens: &[&str], beam: &BeamConfig) -> Result<Vec<f64>, DecodeError> {
    let ids = vocab.encode(tokens);
    match model {
        AnyModel::LstmLm(m) => {
            if ids.is_empty() {
                return Err(DecodeError::EmptySentence);
            }
            Ok(decode::surprisal_direct(m, &ids)?)
        }
        AnyModel::ActionLstm(m) => decode::word_sync_beam_with_retry(m, &ids, beam).map(|r| r.surprisals()),
        AnyModel::Rnng(m) => decode::word_sync_beam_with_retry(m, &ids, beam).map(|r| r.surprisals()),
    }
}

/// Output of scoring: records plus notes about items left out.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Scored {
    pub records: Vec<SurprisalRecord>,
    pub notes: Vec<String>,
}

/// Scores every sentence of a suite. An item with a sentence the beam
/// cannot parse, even after the retry, is left out entirely and noted.
pub fn score_suite(model: &AnyModel, vocab: &Vocabulary, suite: &TestSuite, tag: &str, beam: &BeamConfig) -> Result<Scored> {
    beam.validate()?;
    let jobs: Vec<(usize, usize)> =
        suite.items.iter().enumerate().flat_map(|(i, it)| (0..it.conditions.len()).map(move |c| (i, c))).collect();
    let results: Vec<Result<Vec<f64>, DecodeError>> = jobs
        .par_iter()
        .map(|&(i, c)| sentence_surprisal(model, vocab, &suite.items[i].conditions[c].tokens(), beam))
        .collect();

    let mut out = Scored::default();
    let mut failed = vec![false; suite.items.len()];
    for (&(i, c), r) in jobs.iter().zip(&results) {
        match r {
            Ok(_) => {}
            Err(DecodeError::BeamFailure { word_index }) => {
                let it = &suite.items[i];
                let note = format!(
                    "beam-failure suite={} item={} condition={} word_index={word_index}; item omitted",
                    suite.name, it.id, it.conditions[c].condition
                );
                warn!("{note}");
                out.notes.push(note);
                failed[i] = true;
            }
            Err(e) => return Err(e.clone().into()),
        }
    }
    for (&(i, c), r) in jobs.iter().zip(results) {
        if failed[i] {
            continue;
        }
        let item = &suite.items[i];
        let ic = &item.conditions[c];
        let surprisals = r.expect("failures handled above");
        for (region, span) in ic.region_spans() {
            for (idx, tok) in span.zip(region.tokens()) {
                out.records.push(SurprisalRecord {
                    suite: suite.name.clone(),
                    item: item.id.clone(),
                    condition: ic.condition.clone(),
                    region: region.name.clone(),
                    token_idx: idx,
                    token: tok.to_string(),
                    surprisal_bits: surprisals[idx],
                    model: tag.to_string(),
                });
            }
        }
    }
    Ok(out)
}

/// Runs `score`; returns the number of records written.
pub fn run(settings: &ScoreSettings) -> Result<usize> {
    let ckpt_path = fsio::resolve(settings.checkpoint.as_deref().ok_or_else(|| LabError::Usage("--checkpoint is required".into()))?);
    if settings.suites.is_empty() {
        return Err(LabError::Usage("at least one --suite is required".into()));
    }
    let ckpt = Checkpoint::load(&ckpt_path)?;
    let tag = settings.model_name.clone().unwrap_or_else(|| ckpt.model.architecture().tag().to_string());
    let beam = settings.beam();
    let mut provenance = Provenance::new("score", settings, ckpt.model.spec().seed).with_input("checkpoint", &ckpt_path)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| LabError::Usage(format!("thread pool: {e}")))?;
    let mut all = Scored::default();
    for path in &settings.suites {
        let suite = load_suite(path)?;
        provenance = provenance.with_input(&format!("suite {}", suite.name), &fsio::resolve(path))?;
        let scored = pool.install(|| score_suite(&ckpt.model, &ckpt.vocabulary, &suite, &tag, &beam))?;
        info!("{}: {} tokens scored, {} notes", suite.name, scored.records.len(), scored.notes.len());
        all.records.extend(scored.records);
        all.notes.extend(scored.notes);
    }
    records::write_tsv(&fsio::resolve(&settings.out), Some(&provenance), &all.notes, &all.records)?;
    Ok(all.records.len())
}
