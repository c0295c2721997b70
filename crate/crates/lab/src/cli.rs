//! Command-line interface. Every subcommand resolves its settings from
//! built-in defaults, then the `--config` TOML table of the same name, then
//! flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rnnglab_core::numcore::OptimizerKind;
use rnnglab_core::Architecture;
use serde::Serialize;

use crate::config;
use crate::corpus::{self, PrepareSettings};
use crate::error::{LabError, Result};
use crate::report::{self, AnalyzeSettings, ReportSettings};
use crate::scoring::{self, ScoreSettings};
use crate::tools::{self, CountDepsSettings, VerifyBeamSettings};
use crate::training::{self, TrainSettings};

#[derive(Parser, Debug)]
#[command(name = "rnnglab", version, about = "Train language models and run surprisal test suites")]
pub struct Cli {
    /// TOML file with one table per subcommand.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Strip a treebank or sample a grammar into a training corpus.
    Prepare(PrepareArgs),
    /// Train a model on a prepared corpus.
    Train(TrainArgs),
    /// Write per-token surprisal for test suites.
    Score(ScoreArgs),
    /// Compute effects and statistics from surprisal tables.
    Analyze(AnalyzeArgs),
    /// Render tables and SVG figures from an analysis.
    Report(ReportArgs),
    /// Count filler-gap dependencies in a traced treebank.
    CountDeps(CountDepsArgs),
    /// Check how often the gold parse stays on the beam.
    VerifyBeam(VerifyBeamArgs),
}

#[derive(Args, Debug, Default, Serialize)]
pub struct PrepareArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub treebank: Option<PathBuf>,
    /// `fillergap`, `npi` or a grammar file.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grammar: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentences: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_count: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_fraction: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_error_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest_hash: Option<String>,
    /// lstm-lm, action-lstm or rnng.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub architecture: Option<Architecture>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embed_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropout: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    /// sgd or adam.
    #[arg(long, value_parser = parse_optimizer)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip_norm: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_train_sentences: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
}

fn parse_optimizer(s: &str) -> std::result::Result<OptimizerKind, String> {
    match s {
        "sgd" => Ok(OptimizerKind::Sgd),
        "adam" => Ok(OptimizerKind::Adam),
        other => Err(format!("unknown optimizer `{other}` (expected sgd or adam)")),
    }
}

#[derive(Args, Debug, Default, Serialize)]
pub struct ScoreArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    /// Suite JSON file; repeatable.
    #[arg(long = "suite")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model_name: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_beam_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_beam_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_structural_actions: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub retry_factor: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<bool>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct AnalyzeArgs {
    /// Surprisal table; repeatable.
    #[arg(long = "records")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<PathBuf>,
    #[arg(long = "suite")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub suites: Vec<PathBuf>,
    /// Region to sum over instead of the measured ones; repeatable.
    #[arg(long = "region")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub analysis: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct CountDepsArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub treebank: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub double_object: Option<bool>,
    /// Preposition marking an indirect object; repeatable.
    #[arg(long = "preposition")]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub prepositions: Vec<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize)]
pub struct VerifyBeamArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sentences: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action_beam_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_beam_size: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_structural_actions: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Executes a parsed command, writing user-facing results to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let file = cli.config.as_deref();
    let say = |out: &mut dyn Write, s: String| out.write_all(s.as_bytes()).map_err(LabError::io("<stdout>"));
    match &cli.command {
        Command::Prepare(a) => {
            let s: PrepareSettings = config::resolve("prepare", file, a)?;
            let (m, hash) = corpus::prepare(&s)?;
            say(
                out,
                format!(
                    "prepared {} train / {} dev sentences, vocabulary {}, {} labels, {} skipped\nmanifest sha256 {hash}\n",
                    m.stats.train_sentences, m.stats.dev_sentences, m.stats.vocab_size, m.stats.labels, m.stats.skipped
                ),
            )
        }
        Command::Train(a) => {
            let s: TrainSettings = config::resolve("train", file, a)?;
            let (_, report) = training::run(&s)?;
            say(out, format!("best epoch {} dev perplexity {:.4}\n", report.best_epoch, report.best_dev_ppl))
        }
        Command::Score(a) => {
            let s: ScoreSettings = config::resolve("score", file, a)?;
            let n = scoring::run(&s)?;
            say(out, format!("wrote {n} records to {}\n", s.out.display()))
        }
        Command::Analyze(a) => {
            let s: AnalyzeSettings = config::resolve("analyze", file, a)?;
            let bundle = report::analyze(&s)?;
            report::write_bundle(&crate::fsio::resolve(&s.out), &bundle)?;
            let mut msg = String::new();
            for r in &bundle.results {
                for b in &r.blocks {
                    for e in &b.effects {
                        msg.push_str(&format!(
                            "{} {} {} {}: mean {:.4} [{:.4}, {:.4}] p={:.4} n={}\n",
                            r.suite,
                            r.model,
                            b.block.as_deref().unwrap_or("-"),
                            e.name,
                            e.interval.mean,
                            e.interval.lower,
                            e.interval.upper,
                            e.p_permutation,
                            e.n
                        ));
                    }
                }
                if !r.dropped.is_empty() {
                    msg.push_str(&format!("{} {}: {} items dropped\n", r.suite, r.model, r.dropped.len()));
                }
            }
            say(out, msg)
        }
        Command::Report(a) => {
            let s: ReportSettings = config::resolve("report", file, a)?;
            let files = report::run(&s)?;
            say(out, files.iter().map(|f| format!("{}\n", f.display())).collect())
        }
        Command::CountDeps(a) => {
            let s: CountDepsSettings = config::resolve("count-deps", file, a)?;
            let table = tools::count_deps(&s)?;
            say(out, table)
        }
        Command::VerifyBeam(a) => {
            let s: VerifyBeamSettings = config::resolve("verify-beam", file, a)?;
            let (cov, _) = tools::verify_beam(&s)?;
            say(
                out,
                format!("gold parse on beam for {}/{} words ({:.4}) over {} sentences\n", cov.gold_present, cov.words, cov.fraction, cov.sentences),
            )
        }
    }
}

/// Parses `args` and runs; returns the process exit code. Help and version
/// exit 0, usage errors 1, data errors 2, numerical failures 3.
pub fn main_with(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
