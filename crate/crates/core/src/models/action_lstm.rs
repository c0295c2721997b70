use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::action::{Action, ActionSpace};
use super::generative::{self, Generative, Heads};
use super::rnng::register_heads;
use super::spec::{Architecture, ModelSpec};
use super::state::{ParserState, TransitionModel};
use super::ModelError;
use crate::numcore::{Graph, LstmState, ParamId, ParamStore, Shape, StackedLstm, Tensor, INIT_SCALE};

/// A single LSTM over the action sequence; REDUCE is only a boundary
/// token, with no stack and no composition.
#[derive(Clone, Debug)]
pub struct ActionLstm {
    spec: ModelSpec,
    space: ActionSpace,
    params: ParamStore,
    token_emb: ParamId,
    lstm: StackedLstm,
    heads: Heads,
}

pub type ActionLstmState = ParserState<LstmState<Tensor>>;

impl ActionLstm {
    pub fn new(spec: ModelSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut p = ParamStore::new();
        let (e, h, l, v) = (spec.embed_dim, spec.hidden_dim, spec.labels, spec.vocab_size);
        let token_emb = p.add_uniform("token_emb", Shape::Matrix(1 + l + v, e), INIT_SCALE, &mut rng);
        let lstm = StackedLstm::register(&mut p, "lstm", e, h, spec.layers, spec.dropout, &mut rng);
        let heads = register_heads(&mut p, h, l, v, &mut rng);
        ActionLstm {
            space: spec.space(),
            spec: ModelSpec { architecture: Architecture::ActionLstm, ..spec },
            params: p,
            token_emb,
            lstm,
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

    /// Embedding row: REDUCE, then one per label, then one per word.
    fn token(&self, a: Action) -> usize {
        match a {
            Action::Reduce => 0,
            Action::Nt(l) => 1 + l as usize,
            Action::Gen(w) => 1 + self.spec.labels + w as usize,
        }
    }
}

impl Generative for ActionLstm {
    type Core<V: Clone> = LstmState<V>;

    fn space(&self) -> &ActionSpace {
        &self.space
    }

    fn params(&self) -> &ParamStore {
        &self.params
    }

    fn heads(&self) -> Heads {
        self.heads
    }

    fn start<G: Graph>(&self, g: &mut G) -> LstmState<G::Var> {
        self.lstm.initial(g)
    }

    fn hidden<G: Graph>(&self, _g: &mut G, core: &LstmState<G::Var>) -> G::Var {
        core.output().clone()
    }

    fn apply<G: Graph>(&self, g: &mut G, core: &LstmState<G::Var>, a: Action) -> Result<LstmState<G::Var>, ModelError> {
        let x = g.row(self.token_emb, self.token(a));
        Ok(self.lstm.step(g, core, &x)?)
    }
}

impl TransitionModel for ActionLstm {
    type Core = LstmState<Tensor>;

    fn space(&self) -> &ActionSpace {
        &self.space
    }

    fn initial_state(&self) -> Result<ActionLstmState, ModelError> {
        generative::initial_state(self)
    }

    fn advance(&self, state: &ActionLstmState, action: Action) -> Result<ActionLstmState, ModelError> {
        generative::advance(self, state, action)
    }
}
