//! Minimal dense-tensor numerics with reverse-mode differentiation.
//!
//! Model code is written once against the [`Graph`] trait and runs either
//! on [`Eager`] (plain evaluation, used for scoring) or on [`Tape`] (records
//! every operation so [`Tape::backward`] can produce parameter gradients).

mod gradcheck;
mod graph;
mod kernels;
mod lstm;
mod optim;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{gradient_check, GradCheck, Objective};
pub use graph::{Eager, Graph};
pub use lstm::{BiLstmComposer, LstmCell, LstmState, StackedLstm, FORGET_BIAS, INIT_SCALE};
pub use optim::{OptimizerConfig, OptimizerKind, Optimizer};
pub use params::{Gradients, ParamId, ParamStore};
pub use tape::{NodeId, Tape};
pub use tensor::{Shape, ShapeError, Tensor};

pub(crate) use kernels::log_softmax as log_softmax_slice;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error(transparent)]
    Shape(#[from] ShapeError),
    #[error("target index {index} out of range for {len} classes")]
    Index { index: usize, len: usize },
    #[error("non-finite gradient in parameter `{param}`")]
    NonFiniteGradient { param: alloc::string::String },
    #[error("sequence must not be empty")]
    EmptySequence,
}

/// `-log softmax(logits)[target]` on any backend.
pub fn softmax_cross_entropy<G: Graph>(
    g: &mut G,
    logits: &G::Var,
    target: usize,
) -> Result<G::Var, NumericError> {
    let len = g.value(logits).len();
    if target >= len {
        return Err(NumericError::Index { index: target, len });
    }
    let lp = g.log_softmax(logits, None);
    let picked = g.pick(&lp, target);
    Ok(g.neg(&picked))
}

/// Probability vector of `logits`, stabilised by max subtraction.
pub fn softmax(logits: &[f64]) -> alloc::vec::Vec<f64> {
    kernels::log_softmax(logits, None)
        .into_iter()
        .map(crate::math::exp)
        .collect()
}
