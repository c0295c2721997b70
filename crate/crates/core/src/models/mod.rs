//! The three language models behind one incremental-scoring interface:
//! a word-level [`LstmLm`], the stackless [`ActionLstm`] and the [`Rnng`].
//!
//! Transition models share [`ParserState`], whose next-action distribution
//! is computed when the state is created, so scoring a candidate action is
//! a table lookup and only surviving beam entries pay for an LSTM step.

mod action;
mod action_lstm;
mod generative;
mod lstm_lm;
mod rnng;
mod spec;
mod state;
mod train;

pub use action::{decode_actions, encode_actions, Action, ActionSpace, Counters, MAX_ACTIONS, MAX_OPEN};
pub use action_lstm::{ActionLstm, ActionLstmState};
pub use lstm_lm::{LmState, LstmLm};
pub use rnng::{Rnng, RnngCore, RnngState};
pub use spec::{Architecture, ModelSpec};
pub use state::{NextDistribution, ParserState, TransitionModel};
pub use train::{perplexity, train, EpochRecord, TrainConfig, TrainReport, TrainStatus};

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::numcore::{Graph, NumericError, ParamStore, ShapeError};
use crate::treebank::OracleError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("illegal action {action}: {reason}")]
    Illegal { action: Action, reason: &'static str },
    #[error("{what} id {index} out of range for {len} entries")]
    Index { what: &'static str, index: usize, len: usize },
    #[error("unknown nonterminal label `{0}`")]
    UnknownLabel(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl From<ShapeError> for ModelError {
    fn from(e: ShapeError) -> Self {
        ModelError::Numeric(e.into())
    }
}

/// One training sentence: word ids and the oracle action sequence.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Example {
    pub words: Vec<u32>,
    pub actions: Vec<Action>,
}

impl Example {
    pub fn from_actions(actions: Vec<Action>) -> Self {
        let words = actions
            .iter()
            .filter_map(|a| match a {
                Action::Gen(w) => Some(*w),
                _ => None,
            })
            .collect();
        Example { words, actions }
    }
}

/// Any of the three architectures.
#[derive(Clone, Debug)]
pub enum AnyModel {
    LstmLm(LstmLm),
    ActionLstm(ActionLstm),
    Rnng(Rnng),
}

impl AnyModel {
    pub fn new(spec: ModelSpec) -> Self {
        match spec.architecture {
            Architecture::LstmLm => AnyModel::LstmLm(LstmLm::new(spec)),
            Architecture::ActionLstm => AnyModel::ActionLstm(ActionLstm::new(spec)),
            Architecture::Rnng => AnyModel::Rnng(Rnng::new(spec)),
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        match self {
            AnyModel::LstmLm(m) => m.spec(),
            AnyModel::ActionLstm(m) => m.spec(),
            AnyModel::Rnng(m) => m.spec(),
        }
    }

    pub fn architecture(&self) -> Architecture {
        self.spec().architecture
    }

    pub fn params(&self) -> &ParamStore {
        match self {
            AnyModel::LstmLm(m) => m.params(),
            AnyModel::ActionLstm(m) => m.params(),
            AnyModel::Rnng(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        match self {
            AnyModel::LstmLm(m) => m.params_mut(),
            AnyModel::ActionLstm(m) => m.params_mut(),
            AnyModel::Rnng(m) => m.params_mut(),
        }
    }

    /// Summed negative log-likelihood (nats): words for the LSTM-LM, the
    /// full action sequence otherwise.
    pub fn loss<G: Graph>(&self, g: &mut G, ex: &Example) -> Result<G::Var, ModelError> {
        match self {
            AnyModel::LstmLm(m) => m.loss(g, &ex.words),
            AnyModel::ActionLstm(m) => m.loss(g, &ex.actions),
            AnyModel::Rnng(m) => m.loss(g, &ex.actions),
        }
    }
}

/// Oracle examples for stripped trees. Words are unkified by position;
/// unknown labels are an error.
pub fn build_examples(trees: &[crate::treebank::ParseTree], vocab: &crate::treebank::Vocabulary, labels: &crate::treebank::Inventory) -> Result<Vec<Example>, ModelError> {
    trees
        .iter()
        .map(|t| {
            let oracle = crate::treebank::tree_to_actions(t)?;
            Ok(Example::from_actions(encode_actions(&oracle, vocab, labels)?))
        })
        .collect()
}
