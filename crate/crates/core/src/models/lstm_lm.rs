use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::{Architecture, ModelSpec};
use super::ModelError;
use crate::numcore::{Eager, Graph, LstmState, NumericError, ParamId, ParamStore, Shape, StackedLstm, Tensor, INIT_SCALE};

/// Sequential word-level LSTM language model. The first word is predicted
/// from the all-zero state; there are no boundary tokens.
#[derive(Clone, Debug)]
pub struct LstmLm {
    spec: ModelSpec,
    params: ParamStore,
    word_emb: ParamId,
    lstm: StackedLstm,
    out_w: ParamId,
    out_b: ParamId,
}

/// Immutable prefix state of an [`LstmLm`].
#[derive(Clone, Debug)]
pub struct LmState {
    lstm: LstmState<Tensor>,
    logprob: f64,
    words: usize,
    next: Arc<Vec<f64>>,
}

impl LmState {
    /// `log P(w | prefix)` for every word id.
    pub fn next_log_probs(&self) -> &[f64] {
        &self.next
    }

    pub fn log_prob(&self) -> f64 {
        self.logprob
    }

    pub fn words(&self) -> usize {
        self.words
    }
}

impl LstmLm {
    pub fn new(spec: ModelSpec) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut p = ParamStore::new();
        let (e, h, v) = (spec.embed_dim, spec.hidden_dim, spec.vocab_size);
        let word_emb = p.add_uniform("word_emb", Shape::Matrix(v, e), INIT_SCALE, &mut rng);
        let lstm = StackedLstm::register(&mut p, "lstm", e, h, spec.layers, spec.dropout, &mut rng);
        let out_w = p.add_uniform("word_out.weight", Shape::Matrix(v, h), INIT_SCALE, &mut rng);
        let out_b = p.add_constant("word_out.bias", Shape::Vector(v), 0.0);
        LstmLm { spec: ModelSpec { architecture: Architecture::LstmLm, ..spec }, params: p, word_emb, lstm, out_w, out_b }
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

    fn logits<G: Graph>(&self, g: &mut G, state: &LstmState<G::Var>) -> G::Var {
        let w = g.param(self.out_w);
        let b = g.param(self.out_b);
        g.affine(&w, state.output(), &b)
    }

    fn check_word(&self, w: u32) -> Result<(), ModelError> {
        if (w as usize) < self.spec.vocab_size {
            Ok(())
        } else {
            Err(ModelError::Index { what: "word", index: w as usize, len: self.spec.vocab_size })
        }
    }

    pub fn initial_state(&self) -> LmState {
        let mut g = Eager::new(&self.params);
        let lstm = self.lstm.initial(&mut g);
        let logits = self.logits(&mut g, &lstm);
        let next = crate::numcore::log_softmax_slice(logits.data(), None);
        LmState { lstm, logprob: 0.0, words: 0, next: Arc::new(next) }
    }

    pub fn advance(&self, state: &LmState, word: u32) -> Result<LmState, ModelError> {
        self.check_word(word)?;
        let mut g = Eager::new(&self.params);
        let x = g.row(self.word_emb, word as usize);
        let lstm = self.lstm.step(&mut g, &state.lstm, &x)?;
        let logits = self.logits(&mut g, &lstm);
        let next = crate::numcore::log_softmax_slice(logits.data(), None);
        Ok(LmState { lstm, logprob: state.logprob + state.next[word as usize], words: state.words + 1, next: Arc::new(next) })
    }

    /// Summed negative log-likelihood (nats) of a sentence.
    pub fn loss<G: Graph>(&self, g: &mut G, words: &[u32]) -> Result<G::Var, ModelError> {
        if words.is_empty() {
            return Err(NumericError::EmptySequence.into());
        }
        let mut state = self.lstm.initial(g);
        let mut terms = Vec::with_capacity(words.len());
        for (i, &w) in words.iter().enumerate() {
            self.check_word(w)?;
            let logits = self.logits(g, &state);
            let lp = g.log_softmax(&logits, None);
            terms.push(g.pick(&lp, w as usize));
            if i + 1 < words.len() {
                let x = g.row(self.word_emb, w as usize);
                state = self.lstm.step(g, &state, &x)?;
            }
        }
        let total = g.sum(&terms);
        Ok(g.neg(&total))
    }
}
