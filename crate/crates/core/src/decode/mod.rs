//! Per-token surprisal: read directly off the softmax chain for the
//! LSTM-LM, and marginalised over incremental parses with word-synchronous
//! beam search for the transition models.
//!
//! Beam surprisal uses one prefix-probability estimate throughout:
//! `P̂(x_1..x_i)` is the summed forward probability of every entry that
//! generated `x_i`, before those entries are pruned to the word beam, and
//! `S(x_i) = log2 P̂(x_1..x_{i-1}) - log2 P̂(x_1..x_i)`. Surprisals therefore
//! telescope to `-log2 P̂(x_1..x_n)`, and since pruning only removes paths,
//! the total can never undercut the exact value.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::models::{Action, LstmLm, ModelError, ParserState, TransitionModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamConfig {
    pub action_beam_size: usize,
    pub word_beam_size: usize,
    /// Consecutive NT/REDUCE actions allowed between two words.
    pub max_structural_actions: usize,
    /// Stop expanding a word once the completed set is full or no
    /// in-progress entry outscores the worst kept completion. Faster, but
    /// the marginal is no longer exact on small parse spaces.
    pub early_stop: bool,
    /// Action-beam multiplier for the single retry after a beam failure.
    pub retry_factor: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        BeamConfig { action_beam_size: 100, word_beam_size: 10, max_structural_actions: 8, early_stop: false, retry_factor: 4 }
    }
}

impl BeamConfig {
    pub fn new(action_beam_size: usize, word_beam_size: usize) -> Self {
        BeamConfig { action_beam_size, word_beam_size, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        if self.word_beam_size == 0 || self.action_beam_size == 0 {
            return Err(DecodeError::Config("beam sizes must be positive"));
        }
        if self.word_beam_size > self.action_beam_size {
            return Err(DecodeError::Config("word beam must not exceed action beam"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecodeError {
    #[error("sentence is empty")]
    EmptySentence,
    #[error("beam exhausted: no analysis generates word {word_index}")]
    BeamFailure { word_index: usize },
    #[error("invalid beam configuration: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `S(x_i)` in bits for every word, from the LSTM-LM's softmax chain.
pub fn surprisal_direct(model: &LstmLm, words: &[u32]) -> Result<Vec<f64>, ModelError> {
    let mut state = model.initial_state();
    let mut out = Vec::with_capacity(words.len());
    for &w in words {
        let next = model.advance(&state, w)?;
        out.push(math::nats_to_bits(state.log_prob() - next.log_prob()));
        state = next;
    }
    Ok(out)
}

/// One analysis kept on the word beam.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamParse {
    pub actions: Vec<Action>,
    /// Forward log probability (nats).
    pub log_prob: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WordStep {
    pub surprisal_bits: f64,
    /// `ln P̂(x_1..x_i)`.
    pub prefix_log_prob: f64,
    /// Entries that generated the word, before pruning.
    pub completed: usize,
    /// The pruned word beam, best first.
    pub beam: Vec<BeamParse>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamResult {
    pub steps: Vec<WordStep>,
    /// The search only succeeded after widening the action beam.
    pub retried: bool,
}

impl BeamResult {
    pub fn surprisals(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.surprisal_bits).collect()
    }
}

struct Candidate {
    parent: usize,
    action: Action,
    score: f64,
}

/// Highest score first, then action ordinal, then insertion order (the sort
/// is stable).
fn rank(cands: &mut [Candidate]) {
    cands.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(a.action.ordinal().cmp(&b.action.ordinal()))
    });
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    math::log_sum_exp(&v)
}

/// Word-synchronous beam search over the model's incremental parses.
pub fn word_sync_beam<M: TransitionModel>(model: &M, words: &[u32], config: &BeamConfig) -> Result<BeamResult, DecodeError> {
    let (steps, failed) = search(model, words, config)?;
    match failed {
        Some(word_index) => Err(DecodeError::BeamFailure { word_index }),
        None => Ok(BeamResult { steps, retried: false }),
    }
}

/// Steps up to the first word nothing could generate, and that word's index.
fn search<M: TransitionModel>(model: &M, words: &[u32], config: &BeamConfig) -> Result<(Vec<WordStep>, Option<usize>), DecodeError> {
    config.validate()?;
    if words.is_empty() {
        return Err(DecodeError::EmptySentence);
    }
    let space = *model.space();
    if let Some(&w) = words.iter().find(|&&w| w as usize >= space.vocab) {
        return Err(ModelError::Index { what: "word", index: w as usize, len: space.vocab }.into());
    }
    let mut beam: Vec<ParserState<M::Core>> = alloc::vec![model.initial_state()?];
    let mut prev_prefix = 0.0;
    let mut steps = Vec::with_capacity(words.len());

    for (i, &w) in words.iter().enumerate() {
        let gen = Action::Gen(w);
        // Arena of every state visited for this word; candidates point into it.
        let mut arena: Vec<ParserState<M::Core>> = core::mem::take(&mut beam);
        let mut fringe: Vec<usize> = (0..arena.len()).collect();
        let mut completions: Vec<Candidate> = Vec::new();

        for depth in 0..=config.max_structural_actions {
            let mut cands = Vec::new();
            for &e in &fringe {
                let s = &arena[e];
                let lp = s.action_log_prob(gen);
                if lp > f64::NEG_INFINITY {
                    completions.push(Candidate { parent: e, action: gen, score: s.log_prob() + lp });
                }
                if depth == config.max_structural_actions {
                    continue;
                }
                let c = s.counters();
                let structural = core::iter::once(Action::Reduce).chain((0..space.labels as u32).map(Action::Nt));
                for a in structural {
                    if !space.is_legal(&c, a) {
                        continue;
                    }
                    let lp = s.action_log_prob(a);
                    if lp > f64::NEG_INFINITY {
                        cands.push(Candidate { parent: e, action: a, score: s.log_prob() + lp });
                    }
                }
            }
            if cands.is_empty() {
                break;
            }
            rank(&mut cands);
            cands.truncate(config.action_beam_size);
            if config.early_stop && completions.len() >= config.word_beam_size {
                let mut scores: Vec<f64> = completions.iter().map(|c| c.score).collect();
                scores.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
                let worst_kept = scores[config.word_beam_size - 1];
                if cands[0].score < worst_kept {
                    break;
                }
            }
            fringe.clear();
            for c in &cands {
                let next = model.advance(&arena[c.parent], c.action)?;
                arena.push(next);
                fringe.push(arena.len() - 1);
            }
        }

        if completions.is_empty() {
            return Ok((steps, Some(i)));
        }
        let prefix = log_sum_exp(completions.iter().map(|c| c.score));
        let completed = completions.len();
        rank(&mut completions);
        completions.truncate(config.word_beam_size);
        for c in &completions {
            beam.push(model.advance(&arena[c.parent], c.action)?);
        }
        steps.push(WordStep {
            surprisal_bits: math::nats_to_bits(prev_prefix - prefix),
            prefix_log_prob: prefix,
            completed,
            beam: beam.iter().map(|s| BeamParse { actions: s.history(), log_prob: s.log_prob() }).collect(),
        });
        prev_prefix = prefix;
    }
    Ok((steps, None))
}

/// [`word_sync_beam`], retried once with a wider action beam on failure.
pub fn word_sync_beam_with_retry<M: TransitionModel>(model: &M, words: &[u32], config: &BeamConfig) -> Result<BeamResult, DecodeError> {
    match word_sync_beam(model, words, config) {
        Err(DecodeError::BeamFailure { .. }) => {
            let wide = BeamConfig { action_beam_size: config.action_beam_size * config.retry_factor.max(1), ..config.clone() };
            let mut r = word_sync_beam(model, words, &wide)?;
            r.retried = true;
            Ok(r)
        }
        other => other,
    }
}

/// Whether the gold incremental parse survived on the word beam.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoldCheck {
    pub word_index: usize,
    /// 1-based position on the word beam; `None` when pruned.
    pub rank: Option<usize>,
}

impl GoldCheck {
    pub fn present(&self) -> bool {
        self.rank.is_some()
    }
}

/// For each word, finds the gold action prefix ending in that word's GEN
/// among the beam entries. Words after a beam failure report `None`.
pub fn verify_gold_on_beam<M: TransitionModel>(model: &M, gold: &[Action], config: &BeamConfig) -> Result<Vec<GoldCheck>, DecodeError> {
    let words: Vec<u32> = gold
        .iter()
        .filter_map(|a| match a {
            Action::Gen(w) => Some(*w),
            _ => None,
        })
        .collect();
    let (steps, _) = search(model, &words, config)?;
    let gen_ends = gold.iter().enumerate().filter(|(_, a)| matches!(a, Action::Gen(_))).map(|(k, _)| k + 1);
    Ok(gen_ends
        .enumerate()
        .map(|(i, end)| GoldCheck {
            word_index: i,
            rank: steps.get(i).and_then(|step| step.beam.iter().position(|p| p.actions == gold[..end])).map(|r| r + 1),
        })
        .collect())
}
