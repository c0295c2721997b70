//! Core algorithms for training small neural language models with and
//! without structural supervision and probing them with controlled
//! psycholinguistic test suites.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line and parallel scoring live in the companion `rnnglab` crate.
//!
//! * [`numcore`]: dense tensors, reverse-mode differentiation, LSTM cells,
//!   optimizers.
//! * [`treebank`]: bracketed trees, annotation stripping, generative
//!   oracles, filler–gap statistics, PCFG sampling, vocabularies.
//! * [`models`]: LSTM-LM, ActionLSTM and RNNG behind one incremental
//!   interface, plus training.
//! * [`decode`]: per-token surprisal, direct and via word-synchronous beam
//!   search.
//! * [`psych`]: test suites, region aggregation, licensing interactions,
//!   NPI metrics and statistics.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod decode;
pub mod math;
pub mod models;
pub mod numcore;
pub mod psych;
pub mod treebank;

pub use decode::{BeamConfig, BeamResult};
pub use models::{Action, ActionLstm, AnyModel, Architecture, LstmLm, ModelSpec, Rnng, TransitionModel};
pub use numcore::{ParamStore, Tensor};
pub use psych::{SurprisalRecord, TestSuite};
pub use treebank::{ParseTree, Vocabulary};

