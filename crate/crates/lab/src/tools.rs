//! `count-deps` and `verify-beam`.

use std::fmt::Write as _;
use std::path::PathBuf;

use log::warn;
use rayon::prelude::*;
use rnnglab_core::decode::{verify_gold_on_beam, BeamConfig, GoldCheck};
use rnnglab_core::models::build_examples;
use rnnglab_core::treebank::{count_filler_gap, DependencyTable, IndirectObjectRule};
use rnnglab_core::AnyModel;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::corpus::{read_raw_trees, Prepared};
use crate::error::{LabError, Result};
use crate::fsio;
use crate::provenance::Provenance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountDepsSettings {
    /// Raw treebank file or directory (traces intact).
    pub treebank: Option<PathBuf>,
    pub double_object: bool,
    pub prepositions: Vec<String>,
    pub out: Option<PathBuf>,
}

impl Default for CountDepsSettings {
    fn default() -> Self {
        let r = IndirectObjectRule::default();
        CountDepsSettings { treebank: None, double_object: r.double_object, prepositions: r.prepositions, out: None }
    }
}

pub fn dependency_tsv(table: &DependencyTable) -> String {
    let mut s = String::from("filler\tsubject\tobject\tindirect_object\tother\tunresolved\n");
    let mut row = |name: &str, c: &rnnglab_core::treebank::FillerCounts| {
        let _ = writeln!(s, "{name}\t{}\t{}\t{}\t{}\t{}", c.subject, c.object, c.indirect_object, c.other, c.unresolved);
    };
    for (f, c) in &table.by_filler {
        row(f, c);
    }
    row("TOTAL", &table.total());
    s
}

/// Counts filler-gap dependencies; returns the table as TSV.
pub fn count_deps(settings: &CountDepsSettings) -> Result<String> {
    let path = fsio::resolve(settings.treebank.as_deref().ok_or_else(|| LabError::Usage("--treebank is required".into()))?);
    let (trees, bad) = read_raw_trees(&path)?;
    for b in &bad {
        warn!("skipped {}:{}: {}", b.source, b.line, b.reason);
    }
    let rule = IndirectObjectRule { double_object: settings.double_object, prepositions: settings.prepositions.clone() };
    let table = count_filler_gap(&trees, &rule);
    let provenance = Provenance::new("count-deps", settings, 0);
    let body = format!("{}{}", provenance.header_lines(), dependency_tsv(&table));
    if let Some(out) = &settings.out {
        fsio::write_atomic(&fsio::resolve(out), body.as_bytes())?;
    }
    Ok(body)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyBeamSettings {
    pub checkpoint: Option<PathBuf>,
    /// Prepared corpus whose dev trees are checked.
    pub corpus: Option<PathBuf>,
    pub sentences: usize,
    pub action_beam_size: usize,
    pub word_beam_size: usize,
    pub max_structural_actions: usize,
    pub out: Option<PathBuf>,
}

impl Default for VerifyBeamSettings {
    fn default() -> Self {
        let b = BeamConfig::default();
        VerifyBeamSettings {
            checkpoint: None,
            corpus: None,
            sentences: 100,
            action_beam_size: b.action_beam_size,
            word_beam_size: b.word_beam_size,
            max_structural_actions: b.max_structural_actions,
            out: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeamCoverage {
    pub sentences: usize,
    pub words: usize,
    pub gold_present: usize,
    pub fraction: f64,
}

/// Checks how often the gold parse survives on the word beam.
pub fn verify_beam(settings: &VerifyBeamSettings) -> Result<(BeamCoverage, String)> {
    let ckpt_path = fsio::resolve(settings.checkpoint.as_deref().ok_or_else(|| LabError::Usage("--checkpoint is required".into()))?);
    let dir = fsio::resolve(settings.corpus.as_deref().ok_or_else(|| LabError::Usage("--corpus is required".into()))?);
    let ckpt = Checkpoint::load(&ckpt_path)?;
    if !ckpt.model.architecture().is_structural() {
        return Err(LabError::Usage("verify-beam needs a structural model".into()));
    }
    let prepared = Prepared::load(&dir)?;
    let config = BeamConfig {
        action_beam_size: settings.action_beam_size,
        word_beam_size: settings.word_beam_size,
        max_structural_actions: settings.max_structural_actions,
        ..BeamConfig::default()
    };
    config.validate()?;
    let n = settings.sentences.min(prepared.dev.len());
    let examples = build_examples(&prepared.dev[..n], &ckpt.vocabulary, &ckpt.labels)?;
    let checks: Vec<Vec<GoldCheck>> = examples
        .par_iter()
        .map(|ex| match &ckpt.model {
            AnyModel::Rnng(m) => verify_gold_on_beam(m, &ex.actions, &config),
            AnyModel::ActionLstm(m) => verify_gold_on_beam(m, &ex.actions, &config),
            AnyModel::LstmLm(_) => unreachable!("checked above"),
        })
        .collect::<Result<_, _>>()?;

    let mut tsv = Provenance::new("verify-beam", settings, 0).with_input("checkpoint", &ckpt_path)?.header_lines();
    tsv.push_str("sentence\tword_index\trank\n");
    let mut cov = BeamCoverage { sentences: n, words: 0, gold_present: 0, fraction: 0.0 };
    for (s, cs) in checks.iter().enumerate() {
        for c in cs {
            cov.words += 1;
            cov.gold_present += c.present() as usize;
            let _ = writeln!(tsv, "{s}\t{}\t{}", c.word_index, c.rank.map_or("NA".to_string(), |r| r.to_string()));
        }
    }
    cov.fraction = cov.gold_present as f64 / cov.words.max(1) as f64;
    if let Some(out) = &settings.out {
        fsio::write_atomic(&fsio::resolve(out), tsv.as_bytes())?;
    }
    Ok((cov, tsv))
}
