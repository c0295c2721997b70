//! `prepare`: turns a treebank or a grammar into a training corpus
//! directory, and loads such a directory back.
//!
//! Layout of a prepared directory:
//!
//! | file | contents |
//! |------|----------|
//! | `train.trees`, `dev.trees` | stripped trees, one per line |
//! | `train.oracle`, `dev.oracle` | generative action sequences |
//! | `vocab.json` | vocabulary and nonterminal labels |
//! | `skipped.tsv` | sentences left out and why |
//! | `manifest.json` | settings, counts and a SHA-256 per file |

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use rnnglab_core::treebank::{
    build_vocab, ingest_records, ingest_trees, read_treebank, tree_to_actions, Corpus, Inventory, ParseTree, Pcfg, SkipReason,
    Vocabulary, FILLER_GAP_GRAMMAR, NPI_GRAMMAR,
};
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fsio;
use crate::provenance::Provenance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PrepareSettings {
    /// Bracketed treebank file, or a directory of them.
    pub treebank: Option<PathBuf>,
    /// `fillergap`, `npi`, or a grammar file, sampled instead of a treebank.
    pub grammar: Option<String>,
    pub sentences: usize,
    pub seed: u64,
    pub max_depth: usize,
    pub max_len: usize,
    pub min_count: usize,
    pub dev_fraction: f64,
    /// Largest tolerated fraction of malformed trees.
    pub max_error_rate: f64,
    pub out: PathBuf,
}

impl Default for PrepareSettings {
    fn default() -> Self {
        PrepareSettings {
            treebank: None,
            grammar: None,
            sentences: 5000,
            seed: 1,
            max_depth: 40,
            max_len: rnnglab_core::treebank::MAX_SENTENCE_LEN,
            min_count: 2,
            dev_fraction: 0.1,
            max_error_rate: 0.0,
            out: PathBuf::from("prepared"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub train_sentences: usize,
    pub dev_sentences: usize,
    pub train_tokens: usize,
    pub dev_tokens: usize,
    pub vocab_size: usize,
    pub labels: usize,
    pub skipped: usize,
    pub malformed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub provenance: Provenance,
    pub settings: PrepareSettings,
    pub stats: CorpusStats,
    /// File name → SHA-256.
    pub files: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    provenance: Provenance,
    vocabulary: Vocabulary,
    labels: Inventory,
}

pub const MANIFEST: &str = "manifest.json";

/// A sentence left out of the corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct SkipEntry {
    pub source: String,
    pub line: usize,
    pub reason: String,
}

fn describe(reason: &SkipReason) -> String {
    match reason {
        SkipReason::Malformed(m) => format!("malformed: {m}"),
        SkipReason::EmptyAfterStrip => "empty after stripping".into(),
        SkipReason::TooLong(n) => format!("too long ({n} words)"),
    }
}

fn treebank_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(LabError::io(path))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(LabError::Data(format!("{}: no treebank files", path.display())));
        }
        Ok(files)
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

/// Reads every file (in parallel) and merges in file-name order.
pub fn read_treebank_files(path: &Path, max_len: usize) -> Result<(Vec<ParseTree>, Vec<SkipEntry>, usize)> {
    let files = treebank_files(path)?;
    let parsed: Vec<Result<(String, Corpus, usize)>> = files
        .par_iter()
        .map(|f| {
            let text = fsio::read_text(f)?;
            let records = read_treebank(&text);
            let n = records.len();
            Ok((f.display().to_string(), ingest_records(&records, max_len), n))
        })
        .collect();
    let mut trees = Vec::new();
    let mut skipped = Vec::new();
    let mut total = 0;
    for p in parsed {
        let (name, corpus, n) = p?;
        total += n;
        trees.extend(corpus.trees);
        skipped.extend(corpus.skipped.iter().map(|s| SkipEntry { source: name.clone(), line: s.position, reason: describe(&s.reason) }));
    }
    Ok((trees, skipped, total))
}

/// Raw (unstripped) trees of a treebank path, for dependency counting.
pub fn read_raw_trees(path: &Path) -> Result<(Vec<ParseTree>, Vec<SkipEntry>)> {
    let mut trees = Vec::new();
    let mut bad = Vec::new();
    for f in treebank_files(path)? {
        let text = fsio::read_text(&f)?;
        for r in read_treebank(&text) {
            match r.tree {
                Ok(t) => trees.push(t),
                Err(e) => bad.push(SkipEntry { source: f.display().to_string(), line: r.line, reason: format!("malformed: {e}") }),
            }
        }
    }
    Ok((trees, bad))
}

pub fn grammar_text(name: &str) -> Result<String> {
    match name {
        "fillergap" => Ok(FILLER_GAP_GRAMMAR.into()),
        "npi" => Ok(NPI_GRAMMAR.into()),
        path => fsio::read_text(&fsio::resolve(Path::new(path))),
    }
}

fn lines_file(provenance: &Provenance, lines: impl Iterator<Item = String>) -> String {
    let mut s = provenance.header_lines();
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

/// Runs `prepare`; returns the manifest and the hash of its bytes.
pub fn prepare(settings: &PrepareSettings) -> Result<(Manifest, String)> {
    if !(settings.dev_fraction > 0.0 && settings.dev_fraction <= 0.5) {
        return Err(LabError::Usage("dev_fraction must be in (0, 0.5]".into()));
    }
    // The output location is not part of the corpus identity.
    let recorded = PrepareSettings { out: PathBuf::new(), ..settings.clone() };
    let mut provenance = Provenance::new("prepare", &recorded, settings.seed);
    let (trees, skipped, total) = match (&settings.treebank, &settings.grammar) {
        (Some(tb), None) => {
            let path = fsio::resolve(tb);
            for f in treebank_files(&path)? {
                let label = f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned());
                provenance = provenance.with_input(&label, &f)?;
            }
            read_treebank_files(&path, settings.max_len)?
        }
        (None, Some(g)) => {
            let text = grammar_text(g)?;
            provenance = provenance.with_input_hash(&format!("grammar {g}"), fsio::sha256_hex(text.as_bytes()));
            let pcfg = Pcfg::parse(&text).map_err(|e| LabError::Data(format!("grammar {g}: {e}")))?;
            let sample = pcfg
                .sample_corpus(settings.sentences, settings.seed, settings.max_depth)
                .map_err(|e| LabError::Data(format!("grammar {g}: {e}")))?;
            if sample.cap_hits > 0 {
                info!("{} samples exceeded depth {} and were redrawn", sample.cap_hits, settings.max_depth);
            }
            let corpus = ingest_trees(&sample.trees, settings.max_len);
            let skipped = corpus
                .skipped
                .iter()
                .map(|s| SkipEntry { source: format!("sample {g}"), line: s.position, reason: describe(&s.reason) })
                .collect();
            (corpus.trees, skipped, settings.sentences)
        }
        _ => return Err(LabError::Usage("give exactly one of --treebank or --grammar".into())),
    };

    let malformed: Vec<&SkipEntry> = skipped.iter().filter(|s| s.reason.starts_with("malformed")).collect();
    let rate = if total == 0 { 0.0 } else { malformed.len() as f64 / total as f64 };
    for s in &skipped {
        warn!("skipped {}:{}: {}", s.source, s.line, s.reason);
    }
    if rate > settings.max_error_rate {
        let listing: Vec<String> = malformed.iter().map(|s| format!("  {}:{}: {}", s.source, s.line, s.reason)).collect();
        return Err(LabError::Data(format!(
            "{} of {total} trees malformed (rate {rate:.4} > {}):\n{}",
            malformed.len(),
            settings.max_error_rate,
            listing.join("\n")
        )));
    }
    if trees.len() < 2 {
        return Err(LabError::Data("fewer than two usable sentences".into()));
    }

    let stride = ((1.0 / settings.dev_fraction).round() as usize).max(2);
    let (mut train, mut dev) = (Vec::new(), Vec::new());
    for (i, t) in trees.into_iter().enumerate() {
        if i % stride == stride - 1 {
            dev.push(t);
        } else {
            train.push(t);
        }
    }
    let train_words: Vec<Vec<&str>> = train.iter().map(|t| t.words()).collect();
    let vocabulary = build_vocab(&train_words, settings.min_count);
    let labels = Corpus { trees: train.iter().chain(&dev).cloned().collect(), skipped: Vec::new() }.labels();

    let out = fsio::resolve(&settings.out);
    let mut files = BTreeMap::new();
    let mut write = |name: &str, bytes: Vec<u8>| -> Result<()> {
        fsio::write_atomic(&out.join(name), &bytes)?;
        files.insert(name.to_string(), fsio::sha256_hex(&bytes));
        Ok(())
    };
    for (name, set) in [("train", &train), ("dev", &dev)] {
        write(&format!("{name}.trees"), lines_file(&provenance, set.iter().map(|t| t.to_string())).into_bytes())?;
        let oracle = set.iter().map(|t| {
            let actions = tree_to_actions(t).expect("stripped trees have oracles");
            actions.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
        });
        write(&format!("{name}.oracle"), lines_file(&provenance, oracle).into_bytes())?;
    }
    let vocab_file = VocabFile { provenance: provenance.clone(), vocabulary: vocabulary.clone(), labels: labels.clone() };
    write("vocab.json", serde_json::to_vec_pretty(&vocab_file).expect("vocabularies serialize"))?;
    let skipped_tsv = lines_file(
        &provenance,
        std::iter::once("source\tline\treason".to_string()).chain(skipped.iter().map(|s| format!("{}\t{}\t{}", s.source, s.line, s.reason))),
    );
    write("skipped.tsv", skipped_tsv.into_bytes())?;

    let stats = CorpusStats {
        train_sentences: train.len(),
        dev_sentences: dev.len(),
        train_tokens: train.iter().map(|t| t.words().len()).sum(),
        dev_tokens: dev.iter().map(|t| t.words().len()).sum(),
        vocab_size: vocabulary.len(),
        labels: labels.len(),
        skipped: skipped.len(),
        malformed: malformed.len(),
    };
    let manifest = Manifest { provenance, settings: recorded, stats, files };
    let bytes = serde_json::to_vec_pretty(&manifest).expect("manifests serialize");
    let hash = fsio::sha256_hex(&bytes);
    fsio::write_atomic(&out.join(MANIFEST), &bytes)?;
    Ok((manifest, hash))
}

/// A prepared corpus directory, with file hashes checked.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub manifest: Manifest,
    pub manifest_hash: String,
    pub vocabulary: Vocabulary,
    pub labels: Inventory,
    pub train: Vec<ParseTree>,
    pub dev: Vec<ParseTree>,
}

pub fn parse_tree_lines(text: &str, path: &Path) -> Result<Vec<ParseTree>> {
    read_treebank(&fsio::strip_comments(text))
        .into_iter()
        .map(|r| r.tree.map_err(|e| LabError::format(path, format!("tree {}: {e}", r.line))))
        .collect()
}

impl Prepared {
    pub fn load(dir: &Path) -> Result<Prepared> {
        let manifest_path = dir.join(MANIFEST);
        let bytes = fsio::read(&manifest_path)?;
        let manifest: Manifest = serde_json::from_slice(&bytes).map_err(|e| LabError::format(&manifest_path, e))?;
        let read_checked = |name: &str| -> Result<String> {
            let path = dir.join(name);
            let text = fsio::read_text(&path)?;
            let expected = manifest.files.get(name).ok_or_else(|| LabError::format(&manifest_path, format!("no entry for {name}")))?;
            let found = fsio::sha256_hex(text.as_bytes());
            if &found != expected {
                return Err(LabError::Provenance { what: path.display().to_string(), expected: expected.clone(), found });
            }
            Ok(text)
        };
        let vocab_text = read_checked("vocab.json")?;
        let train_text = read_checked("train.trees")?;
        let dev_text = read_checked("dev.trees")?;
        let vocab: VocabFile = serde_json::from_str(&vocab_text).map_err(|e| LabError::format(dir.join("vocab.json"), e))?;
        Ok(Prepared {
            manifest_hash: fsio::sha256_hex(&bytes),
            vocabulary: vocab.vocabulary,
            labels: vocab.labels,
            train: parse_tree_lines(&train_text, &dir.join("train.trees"))?,
            dev: parse_tree_lines(&dev_text, &dir.join("dev.trees"))?,
            manifest,
        })
    }
}
