//! Shared machinery for models that generate action sequences: masked
//! action softmax with factored GEN, training loss, and incremental states.

use alloc::vec::Vec;

use super::action::{Action, ActionSpace, Counters};
use super::state::{NextDistribution, ParserState};
use super::ModelError;
use crate::numcore::{Eager, Graph, NumericError, ParamId, ParamStore, Tensor};

/// Output layer: `2 + labels` top-level logits and `vocab` word logits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Heads {
    pub action_w: ParamId,
    pub action_b: ParamId,
    pub word_w: ParamId,
    pub word_b: ParamId,
}

pub(crate) trait Generative {
    type Core<V: Clone>: Clone;

    fn space(&self) -> &ActionSpace;
    fn params(&self) -> &ParamStore;
    fn heads(&self) -> Heads;
    fn start<G: Graph>(&self, g: &mut G) -> Self::Core<G::Var>;
    /// Feature vector the output heads read from.
    fn hidden<G: Graph>(&self, g: &mut G, core: &Self::Core<G::Var>) -> G::Var;
    /// Applies an already validated action.
    fn apply<G: Graph>(&self, g: &mut G, core: &Self::Core<G::Var>, a: Action) -> Result<Self::Core<G::Var>, ModelError>;
}

fn distribution<M: Generative, G: Graph>(m: &M, g: &mut G, core: &M::Core<G::Var>, c: &Counters) -> NextDistribution {
    let heads = m.heads();
    let h = m.hidden(g, core);
    let top = head(g, heads.action_w, heads.action_b, &h);
    let gen_legal = m.space().is_legal(c, Action::Gen(0));
    let words = gen_legal.then(|| head(g, heads.word_w, heads.word_b, &h));
    let top_t: Tensor = g.value(&top).clone();
    let words_t = words.map(|w| g.value(&w).clone());
    NextDistribution::from_logits(m.space(), c, &top_t, words_t.as_ref())
}

fn head<G: Graph>(g: &mut G, w: ParamId, b: ParamId, h: &G::Var) -> G::Var {
    let w = g.param(w);
    let b = g.param(b);
    g.affine(&w, h, &b)
}

pub(crate) fn initial_state<M>(m: &M) -> Result<ParserState<M::Core<Tensor>>, ModelError>
where
    M: Generative,
{
    let mut g = Eager::new(m.params());
    let core = m.start(&mut g);
    let c = Counters::default();
    let next = distribution(m, &mut g, &core, &c);
    Ok(ParserState::new(core, c, 0.0, next))
}

pub(crate) fn advance<M>(m: &M, s: &ParserState<M::Core<Tensor>>, a: Action) -> Result<ParserState<M::Core<Tensor>>, ModelError>
where
    M: Generative,
{
    m.space().check(&s.counters, a)?;
    let mut g = Eager::new(m.params());
    let core = m.apply(&mut g, &s.core, a)?;
    let mut c = s.counters;
    c.apply(a);
    let next = distribution(m, &mut g, &core, &c);
    Ok(s.successor(core, a, next))
}

/// Summed negative log-likelihood (nats) of an action sequence.
pub(crate) fn loss<M: Generative, G: Graph>(m: &M, g: &mut G, actions: &[Action]) -> Result<G::Var, ModelError> {
    if actions.is_empty() {
        return Err(NumericError::EmptySequence.into());
    }
    let space = m.space();
    let heads = m.heads();
    let mut c = Counters::default();
    let mut core = m.start(g);
    let mut terms = Vec::with_capacity(actions.len() + actions.len() / 2);
    for (i, &a) in actions.iter().enumerate() {
        space.check(&c, a)?;
        let h = m.hidden(g, &core);
        let logits = head(g, heads.action_w, heads.action_b, &h);
        let lp = g.log_softmax(&logits, Some(&space.mask(&c)));
        terms.push(g.pick(&lp, a.ordinal()));
        if let Action::Gen(w) = a {
            let wl = head(g, heads.word_w, heads.word_b, &h);
            let lw = g.log_softmax(&wl, None);
            terms.push(g.pick(&lw, w as usize));
        }
        if i + 1 < actions.len() {
            core = m.apply(g, &core, a)?;
        }
        c.apply(a);
    }
    let total = g.sum(&terms);
    Ok(g.neg(&total))
}
