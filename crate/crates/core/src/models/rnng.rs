use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::action::{Action, ActionSpace};
use super::generative::{self, Generative, Heads};
use super::spec::{Architecture, ModelSpec};
use super::state::{ParserState, TransitionModel};
use super::ModelError;
use crate::numcore::{BiLstmComposer, Graph, LstmState, ParamId, ParamStore, Shape, StackedLstm, Tensor, INIT_SCALE};

#[derive(Clone, Debug)]
enum StackItem<V> {
    Open(u32),
    Closed(V),
}

/// One stack element together with the stack-LSTM state after pushing it.
/// Nodes are shared between states, so REDUCE rewinds by following
/// `parent` instead of recomputing.
#[derive(Debug)]
pub struct StackNode<V> {
    parent: Option<Arc<StackNode<V>>>,
    item: StackItem<V>,
    lstm: LstmState<V>,
    depth: usize,
}

/// Neural stack, terminal buffer and action history of an [`Rnng`].
#[derive(Debug)]
pub struct RnngCore<V> {
    stack: Option<Arc<StackNode<V>>>,
    terminals: LstmState<V>,
    history: LstmState<V>,
}

impl<V: Clone> Clone for RnngCore<V> {
    fn clone(&self) -> Self {
        RnngCore { stack: self.stack.clone(), terminals: self.terminals.clone(), history: self.history.clone() }
    }
}

impl<V> RnngCore<V> {
    /// Elements on the stack: open nonterminals plus finished items.
    pub fn stack_depth(&self) -> usize {
        self.stack.as_ref().map_or(0, |n| n.depth)
    }

    /// Finished elements (words or composed constituents) on the stack.
    pub fn closed_on_stack(&self) -> usize {
        let mut n = 0;
        let mut node = self.stack.as_deref();
        while let Some(s) = node {
            n += matches!(s.item, StackItem::Closed(_)) as usize;
            node = s.parent.as_deref();
        }
        n
    }
}

/// Recurrent neural network grammar in generative mode.
#[derive(Clone, Debug)]
pub struct Rnng {
    spec: ModelSpec,
    space: ActionSpace,
    params: ParamStore,
    word_emb: ParamId,
    nt_emb: ParamId,
    action_emb: ParamId,
    stack: StackedLstm,
    terminals: StackedLstm,
    history: StackedLstm,
    composer: BiLstmComposer,
    combine_w: ParamId,
    combine_b: ParamId,
    heads: Heads,
}

pub type RnngState = ParserState<RnngCore<Tensor>>;

impl Rnng {
    pub fn new(spec: ModelSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut p = ParamStore::new();
        let (e, h, l, v) = (spec.embed_dim, spec.hidden_dim, spec.labels, spec.vocab_size);
        let word_emb = p.add_uniform("word_emb", Shape::Matrix(v, e), INIT_SCALE, &mut rng);
        let nt_emb = p.add_uniform("nt_emb", Shape::Matrix(l, e), INIT_SCALE, &mut rng);
        let action_emb = p.add_uniform("action_emb", Shape::Matrix(2 + l, e), INIT_SCALE, &mut rng);
        let stack = StackedLstm::register(&mut p, "stack", e, h, spec.layers, spec.dropout, &mut rng);
        let terminals = StackedLstm::register(&mut p, "terminals", e, h, spec.layers, spec.dropout, &mut rng);
        let history = StackedLstm::register(&mut p, "history", e, h, spec.layers, spec.dropout, &mut rng);
        let composer = BiLstmComposer::register(&mut p, "compose", e, &mut rng);
        let combine_w = p.add_uniform("combine.weight", Shape::Matrix(h, 3 * h), INIT_SCALE, &mut rng);
        let combine_b = p.add_constant("combine.bias", Shape::Vector(h), 0.0);
        let heads = register_heads(&mut p, h, l, v, &mut rng);
        Rnng {
            space: spec.space(),
            spec: ModelSpec { architecture: Architecture::Rnng, ..spec },
            params: p,
            word_emb,
            nt_emb,
            action_emb,
            stack,
            terminals,
            history,
            composer,
            combine_w,
            combine_b,
            heads,
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn loss<G: Graph>(&self, g: &mut G, actions: &[Action]) -> Result<G::Var, ModelError> {
        generative::loss(self, g, actions)
    }

    fn push<G: Graph>(&self, g: &mut G, parent: Option<Arc<StackNode<G::Var>>>, item: StackItem<G::Var>, x: &G::Var) -> Result<Arc<StackNode<G::Var>>, ModelError> {
        let below = match &parent {
            Some(n) => n.lstm.clone(),
            None => self.stack.initial(g),
        };
        let lstm = self.stack.step(g, &below, x)?;
        let depth = parent.as_ref().map_or(0, |n| n.depth) + 1;
        Ok(Arc::new(StackNode { parent, item, lstm, depth }))
    }
}

pub(crate) fn register_heads(p: &mut ParamStore, h: usize, labels: usize, vocab: usize, rng: &mut ChaCha8Rng) -> Heads {
    let action_w = p.add_uniform("action_out.weight", Shape::Matrix(2 + labels, h), INIT_SCALE, rng);
    let action_b = p.add_constant("action_out.bias", Shape::Vector(2 + labels), 0.0);
    let word_w = p.add_uniform("word_out.weight", Shape::Matrix(vocab, h), INIT_SCALE, rng);
    let word_b = p.add_constant("word_out.bias", Shape::Vector(vocab), 0.0);
    Heads { action_w, action_b, word_w, word_b }
}

impl Generative for Rnng {
    type Core<V: Clone> = RnngCore<V>;

    fn space(&self) -> &ActionSpace {
        &self.space
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn heads(&self) -> Heads {
        self.heads
    }

    fn start<G: Graph>(&self, g: &mut G) -> RnngCore<G::Var> {
        RnngCore { stack: None, terminals: self.terminals.initial(g), history: self.history.initial(g) }
    }

    fn hidden<G: Graph>(&self, g: &mut G, core: &RnngCore<G::Var>) -> G::Var {
        let top = match &core.stack {
            Some(n) => n.lstm.output().clone(),
            None => g.zeros(self.stack.hidden_dim()),
        };
        let joined = g.concat(&[top, core.terminals.output().clone(), core.history.output().clone()]);
        let w = g.param(self.combine_w);
        let b = g.param(self.combine_b);
        let z = g.affine(&w, &joined, &b);
        g.tanh(&z)
    }

    fn apply<G: Graph>(&self, g: &mut G, core: &RnngCore<G::Var>, a: Action) -> Result<RnngCore<G::Var>, ModelError> {
        let mut terminals = core.terminals.clone();
        let stack = match a {
            Action::Nt(l) => {
                let x = g.row(self.nt_emb, l as usize);
                self.push(g, core.stack.clone(), StackItem::Open(l), &x)?
            }
            Action::Gen(w) => {
                let x = g.row(self.word_emb, w as usize);
                terminals = self.terminals.step(g, &terminals, &x)?;
                self.push(g, core.stack.clone(), StackItem::Closed(x.clone()), &x)?
            }
            Action::Reduce => {
                let mut children = Vec::new();
                let mut node = core.stack.as_ref();
                let (label, open) = loop {
                    let n = node.ok_or(ModelError::Illegal { action: a, reason: "no open constituent" })?;
                    match &n.item {
                        StackItem::Closed(v) => children.push(v.clone()),
                        StackItem::Open(l) => break (*l, n),
                    }
                    node = n.parent.as_ref();
                };
                children.reverse();
                let label_v = g.row(self.nt_emb, label as usize);
                let composed = self.composer.compose(g, &label_v, &children)?;
                self.push(g, open.parent.clone(), StackItem::Closed(composed.clone()), &composed)?
            }
        };
        let x = g.row(self.action_emb, a.ordinal());
        let history = self.history.step(g, &core.history, &x)?;
        Ok(RnngCore { stack: Some(stack), terminals, history })
    }
}

impl TransitionModel for Rnng {
    type Core = RnngCore<Tensor>;

    fn space(&self) -> &ActionSpace {
        &self.space
    }

    fn initial_state(&self) -> Result<RnngState, ModelError> {
        generative::initial_state(self)
    }

    fn advance(&self, state: &RnngState, action: Action) -> Result<RnngState, ModelError> {
        generative::advance(self, state, action)
    }
}

impl RnngState {
    pub fn stack_depth(&self) -> usize {
        self.core.stack_depth()
    }

    pub fn closed_on_stack(&self) -> usize {
        self.core.closed_on_stack()
    }
}

const _: fn() = || {
    fn shareable<T: Send + Sync>() {}
    shareable::<RnngState>();
    shareable::<Rnng>();
};
