#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rnnglab::checkpoint::Checkpoint;
use rnnglab::corpus::Prepared;
use rnnglab::provenance::Provenance;
use rnnglab_core::{AnyModel, Architecture, ModelSpec};

pub struct Run {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

/// Runs the CLI in-process.
pub fn run(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("rnnglab").chain(args.iter().copied());
    let code = rnnglab::cli::main_with(argv, &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub fn suite(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("suites").join(name)
}

/// Prepares a filler-gap corpus under `dir/prep`.
pub fn prepare_fillergap(dir: &Path, sentences: usize) -> PathBuf {
    let out = dir.join("prep");
    let n = sentences.to_string();
    let r = run(&["prepare", "--grammar", "fillergap", "--sentences", &n, "--out", p(&out)]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    out
}

/// Saves an all-zero model over a prepared corpus's vocabulary.
pub fn zero_checkpoint(prep: &Path, arch: Architecture, path: &Path) -> Checkpoint {
    let prepared = Prepared::load(prep).unwrap();
    let spec = ModelSpec { layers: 1, dropout: 0.0, ..ModelSpec::new(arch, prepared.vocabulary.len(), prepared.labels.len()).with_dims(8, 8) };
    let mut model = AnyModel::new(spec);
    model.params_mut().zero_all();
    let ckpt = Checkpoint { model, vocabulary: prepared.vocabulary, labels: prepared.labels, provenance: Provenance::new("test", &(), 0) };
    ckpt.save(path).unwrap();
    ckpt
}
