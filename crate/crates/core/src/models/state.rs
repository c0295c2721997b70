use alloc::sync::Arc;
use alloc::vec::Vec;

use super::action::{Action, ActionSpace, Counters};
use super::ModelError;
use crate::numcore::Tensor;

/// Log-probabilities of every possible next action, already masked.
#[derive(Clone, Debug, PartialEq)]
pub struct NextDistribution {
    /// Indexed by [`Action::ordinal`]; illegal entries are `-inf`.
    pub top: Vec<f64>,
    /// `log P(word | GEN)`; empty when GEN is illegal.
    pub words: Vec<f64>,
}

impl NextDistribution {
    pub fn log_prob(&self, a: Action) -> f64 {
        let lp = self.top.get(a.ordinal()).copied().unwrap_or(f64::NEG_INFINITY);
        match a {
            Action::Gen(w) => self.words.get(w as usize).map_or(f64::NEG_INFINITY, |lw| lp + lw),
            _ => lp,
        }
    }

    pub(crate) fn from_logits(space: &ActionSpace, counters: &Counters, top: &Tensor, words: Option<&Tensor>) -> Self {
        let mask = space.mask(counters);
        let top = if mask.iter().any(|&m| m) {
            crate::numcore::log_softmax_slice(top.data(), Some(&mask))
        } else {
            alloc::vec![f64::NEG_INFINITY; mask.len()]
        };
        let words = match words {
            Some(w) if mask[1] => crate::numcore::log_softmax_slice(w.data(), None),
            _ => Vec::new(),
        };
        NextDistribution { top, words }
    }
}

#[derive(Debug)]
struct HistoryNode {
    action: Action,
    parent: Option<Arc<HistoryNode>>,
}

/// Immutable incremental state of a transition model. Advancing returns a
/// new state and leaves this one untouched, so beams can share prefixes.
#[derive(Clone, Debug)]
pub struct ParserState<C> {
    pub(crate) core: C,
    pub(crate) counters: Counters,
    pub(crate) logprob: f64,
    pub(crate) next: Arc<NextDistribution>,
    history: Option<Arc<HistoryNode>>,
}

impl<C> ParserState<C> {
    pub(crate) fn new(core: C, counters: Counters, logprob: f64, next: NextDistribution) -> Self {
        ParserState { core, counters, logprob, next: Arc::new(next), history: None }
    }

    pub(crate) fn successor(&self, core: C, action: Action, next: NextDistribution) -> Self {
        let mut counters = self.counters;
        counters.apply(action);
        ParserState {
            core,
            counters,
            logprob: self.logprob + self.next.log_prob(action),
            next: Arc::new(next),
            history: Some(Arc::new(HistoryNode { action, parent: self.history.clone() })),
        }
    }

    /// Cumulative log probability (nats) of the actions taken so far.
    pub fn log_prob(&self) -> f64 {
        self.logprob
    }

    /// `log P(action | state)`; `-inf` when illegal.
    pub fn action_log_prob(&self, a: Action) -> f64 {
        self.next.log_prob(a)
    }

    pub fn distribution(&self) -> &NextDistribution {
        &self.next
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn is_terminal(&self) -> bool {
        self.counters.is_terminal()
    }

    pub fn last_action(&self) -> Option<Action> {
        self.history.as_ref().map(|h| h.action)
    }

    /// All actions taken, oldest first.
    pub fn history(&self) -> Vec<Action> {
        let mut out = Vec::with_capacity(self.counters.actions);
        let mut node = self.history.as_deref();
        while let Some(n) = node {
            out.push(n.action);
            node = n.parent.as_deref();
        }
        out.reverse();
        out
    }
}

/// Models that generate `(tree, sentence)` pairs one action at a time.
pub trait TransitionModel: Sync {
    type Core: Clone + Send + Sync;

    fn space(&self) -> &ActionSpace;
    fn initial_state(&self) -> Result<ParserState<Self::Core>, ModelError>;
    /// Fails on illegal or out-of-range actions.
    fn advance(&self, state: &ParserState<Self::Core>, action: Action) -> Result<ParserState<Self::Core>, ModelError>;

    /// Joint log probability of a complete or partial action sequence.
    fn sequence_log_prob(&self, actions: &[Action]) -> Result<f64, ModelError> {
        let mut s = self.initial_state()?;
        for &a in actions {
            s = self.advance(&s, a)?;
        }
        Ok(s.log_prob())
    }
}
