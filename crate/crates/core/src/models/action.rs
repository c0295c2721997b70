use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::treebank::{Inventory, TreeAction, Vocabulary};

/// A generative transition with labels and words as dense ids.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Nt(u32),
    Gen(u32),
    Reduce,
}

impl Action {
    /// Rank used for deterministic tie-breaking: REDUCE < GEN < NT(0) < NT(1) ...
    pub fn ordinal(self) -> usize {
        match self {
            Action::Reduce => 0,
            Action::Gen(_) => 1,
            Action::Nt(l) => 2 + l as usize,
        }
    }

    pub fn is_structural(self) -> bool {
        !matches!(self, Action::Gen(_))
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Nt(l) => write!(f, "NT({l})"),
            Action::Gen(w) => write!(f, "GEN({w})"),
            Action::Reduce => f.write_str("REDUCE"),
        }
    }
}

/// Default cap on simultaneously open nonterminals.
pub const MAX_OPEN: usize = 60;
/// Default cap on actions per sentence.
pub const MAX_ACTIONS: usize = 300;

/// Progress counters that fully determine which actions are legal.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub opens: usize,
    pub actions: usize,
    pub words: usize,
    /// The last action was NT, so the top constituent has no children yet.
    pub fresh_open: bool,
}

impl Counters {
    pub fn is_terminal(&self) -> bool {
        self.actions > 0 && self.opens == 0
    }

    pub(crate) fn apply(&mut self, a: Action) {
        self.actions += 1;
        self.fresh_open = matches!(a, Action::Nt(_));
        match a {
            Action::Nt(_) => self.opens += 1,
            Action::Gen(_) => self.words += 1,
            Action::Reduce => self.opens -= 1,
        }
    }
}

/// NT/GEN/REDUCE inventory over `labels` nonterminals and `vocab` words,
/// with the well-formedness and length constraints.
///
/// The length cap is enforced so that every legal prefix can still be
/// completed: NT needs room for itself, one word and a REDUCE for every
/// open constituent, GEN for itself and the closing REDUCEs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSpace {
    pub labels: usize,
    pub vocab: usize,
    pub max_open: usize,
    pub max_actions: usize,
}

impl ActionSpace {
    pub fn new(labels: usize, vocab: usize) -> Self {
        ActionSpace { labels, vocab, max_open: MAX_OPEN, max_actions: MAX_ACTIONS }
    }

    /// Number of top-level outcomes: REDUCE, GEN and one NT per label.
    pub fn top_level(&self) -> usize {
        2 + self.labels
    }

    fn why_illegal(&self, c: &Counters, a: Action) -> Option<&'static str> {
        if c.is_terminal() {
            return Some("sentence is complete");
        }
        match a {
            Action::Reduce if c.opens == 0 => Some("no open constituent"),
            Action::Reduce if c.fresh_open => Some("constituent would be empty"),
            Action::Reduce => None,
            Action::Gen(_) if c.opens == 0 => Some("no open constituent"),
            Action::Gen(_) if c.actions + 1 + c.opens > self.max_actions => Some("action cap reached"),
            Action::Gen(_) => None,
            Action::Nt(_) if c.opens >= self.max_open => Some("too many open constituents"),
            Action::Nt(_) if c.actions + 2 + c.opens + 1 > self.max_actions => Some("action cap reached"),
            Action::Nt(_) => None,
        }
    }

    pub fn is_legal(&self, c: &Counters, a: Action) -> bool {
        self.why_illegal(c, a).is_none()
    }

    /// Legality, range and label checks for one action.
    pub fn check(&self, c: &Counters, a: Action) -> Result<(), ModelError> {
        match a {
            Action::Nt(l) if l as usize >= self.labels => {
                return Err(ModelError::Index { what: "label", index: l as usize, len: self.labels })
            }
            Action::Gen(w) if w as usize >= self.vocab => {
                return Err(ModelError::Index { what: "word", index: w as usize, len: self.vocab })
            }
            _ => {}
        }
        match self.why_illegal(c, a) {
            Some(reason) => Err(ModelError::Illegal { action: a, reason }),
            None => Ok(()),
        }
    }

    /// Mask over the top-level outcomes, indexed by [`Action::ordinal`].
    pub fn mask(&self, c: &Counters) -> Vec<bool> {
        let mut m = vec![false; self.top_level()];
        m[0] = self.is_legal(c, Action::Reduce);
        m[1] = self.is_legal(c, Action::Gen(0));
        let nt = self.is_legal(c, Action::Nt(0));
        m[2..].fill(nt);
        m
    }

    /// Every concrete legal action, in ordinal order then word id.
    pub fn legal_actions(&self, c: &Counters) -> Vec<Action> {
        let m = self.mask(c);
        let mut out = Vec::new();
        if m[0] {
            out.push(Action::Reduce);
        }
        if m[1] {
            out.extend((0..self.vocab as u32).map(Action::Gen));
        }
        out.extend((0..self.labels as u32).filter(|_| m[2]).map(Action::Nt));
        out
    }
}

/// Maps an oracle sequence over strings to ids. Words are unkified by their
/// position in the sentence.
pub fn encode_actions(actions: &[TreeAction], vocab: &Vocabulary, labels: &Inventory) -> Result<Vec<Action>, ModelError> {
    let mut position = 0;
    actions
        .iter()
        .map(|a| match a {
            TreeAction::Nt(l) => labels
                .get(l)
                .map(Action::Nt)
                .ok_or_else(|| ModelError::UnknownLabel(String::from(l.as_str()))),
            TreeAction::Gen(w) => {
                position += 1;
                Ok(Action::Gen(vocab.unkify(w, position - 1)))
            }
            TreeAction::Reduce => Ok(Action::Reduce),
        })
        .collect()
}

/// Inverse of [`encode_actions`] for display.
pub fn decode_actions(actions: &[Action], vocab: &Vocabulary, labels: &Inventory) -> Vec<TreeAction> {
    actions
        .iter()
        .map(|a| match *a {
            Action::Nt(l) => TreeAction::Nt(String::from(labels.symbol(l))),
            Action::Gen(w) => TreeAction::Gen(String::from(vocab.word(w))),
            Action::Reduce => TreeAction::Reduce,
        })
        .collect()
}
