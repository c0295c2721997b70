use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use super::graph::Graph;
use super::params::{ParamId, ParamStore};
use super::tensor::{Shape, ShapeError};
use super::NumericError;

/// Initial weight range; biases start at zero except the forget gate.
pub const INIT_SCALE: f64 = 0.1;
pub const FORGET_BIAS: f64 = 1.0;

/// One LSTM cell. Gates are stacked `[input, forget, output, candidate]`
/// in a single `4h x (input + h)` matrix applied to `[x; h_prev]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LstmCell {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl LstmCell {
    pub fn register<R: Rng>(store: &mut ParamStore, name: &str, input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let weight = store.add_uniform(
            format!("{name}.weight"),
            Shape::Matrix(4 * hidden_dim, input_dim + hidden_dim),
            INIT_SCALE,
            rng,
        );
        let bias = store.add_constant(format!("{name}.bias"), Shape::Vector(4 * hidden_dim), 0.0);
        store.get_mut(bias).data_mut()[hidden_dim..2 * hidden_dim].fill(FORGET_BIAS);
        LstmCell { input_dim, hidden_dim, weight, bias }
    }

    /// Standard LSTM update returning `(h, c)`.
    pub fn step<G: Graph>(&self, g: &mut G, x: &G::Var, h_prev: &G::Var, c_prev: &G::Var) -> Result<(G::Var, G::Var), ShapeError> {
        ShapeError::check("x", Shape::Vector(self.input_dim), g.value(x).shape())?;
        ShapeError::check("h_prev", Shape::Vector(self.hidden_dim), g.value(h_prev).shape())?;
        ShapeError::check("c_prev", Shape::Vector(self.hidden_dim), g.value(c_prev).shape())?;
        let hd = self.hidden_dim;
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        let xh = g.concat(&[x.clone(), h_prev.clone()]);
        let gates = g.affine(&w, &xh, &b);
        let i = g.slice(&gates, 0, hd);
        let i = g.sigmoid(&i);
        let f = g.slice(&gates, hd, hd);
        let f = g.sigmoid(&f);
        let o = g.slice(&gates, 2 * hd, hd);
        let o = g.sigmoid(&o);
        let u = g.slice(&gates, 3 * hd, hd);
        let u = g.tanh(&u);
        let kept = g.mul(&f, c_prev);
        let fresh = g.mul(&i, &u);
        let c = g.add(&kept, &fresh);
        let tc = g.tanh(&c);
        let h = g.mul(&o, &tc);
        Ok((h, c))
    }
}

/// Hidden and cell vectors for every layer of a [`StackedLstm`].
#[derive(Clone, Debug)]
pub struct LstmState<V> {
    pub h: Vec<V>,
    pub c: Vec<V>,
}

impl<V> LstmState<V> {
    /// Top-layer hidden vector.
    pub fn output(&self) -> &V {
        self.h.last().expect("lstm with zero layers")
    }
}

/// Multi-layer LSTM with dropout on the input and between layers.
#[derive(Clone, Debug, PartialEq)]
pub struct StackedLstm {
    pub cells: Vec<LstmCell>,
    pub dropout: f64,
}

impl StackedLstm {
    pub fn register<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input_dim: usize,
        hidden_dim: usize,
        layers: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let cells = (0..layers)
            .map(|l| {
                let inp = if l == 0 { input_dim } else { hidden_dim };
                LstmCell::register(store, &format!("{name}.l{l}"), inp, hidden_dim, rng)
            })
            .collect();
        StackedLstm { cells, dropout }
    }

    pub fn hidden_dim(&self) -> usize {
        self.cells[0].hidden_dim
    }

    pub fn initial<G: Graph>(&self, g: &mut G) -> LstmState<G::Var> {
        let h = self.cells.iter().map(|c| g.zeros(c.hidden_dim)).collect();
        let c = self.cells.iter().map(|c| g.zeros(c.hidden_dim)).collect();
        LstmState { h, c }
    }

    pub fn step<G: Graph>(&self, g: &mut G, state: &LstmState<G::Var>, x: &G::Var) -> Result<LstmState<G::Var>, ShapeError> {
        let mut input = g.dropout(x, self.dropout);
        let mut h = Vec::with_capacity(self.cells.len());
        let mut c = Vec::with_capacity(self.cells.len());
        for (l, cell) in self.cells.iter().enumerate() {
            let (hl, cl) = cell.step(g, &input, &state.h[l], &state.c[l])?;
            if l + 1 < self.cells.len() {
                input = g.dropout(&hl, self.dropout);
            }
            h.push(hl);
            c.push(cl);
        }
        Ok(LstmState { h, c })
    }
}

/// Composition of a finished constituent: forward and backward LSTMs over
/// `[label, children...]`, final states joined by an affine map and `tanh`.
#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmComposer {
    pub dim: usize,
    pub forward: LstmCell,
    pub backward: LstmCell,
    pub weight: ParamId,
    pub bias: ParamId,
}

impl BiLstmComposer {
    pub fn register<R: Rng>(store: &mut ParamStore, name: &str, dim: usize, rng: &mut R) -> Self {
        let forward = LstmCell::register(store, &format!("{name}.fwd"), dim, dim, rng);
        let backward = LstmCell::register(store, &format!("{name}.bwd"), dim, dim, rng);
        let weight = store.add_uniform(format!("{name}.weight"), Shape::Matrix(dim, 2 * dim), INIT_SCALE, rng);
        let bias = store.add_constant(format!("{name}.bias"), Shape::Vector(dim), 0.0);
        BiLstmComposer { dim, forward, backward, weight, bias }
    }

    pub fn compose<G: Graph>(&self, g: &mut G, label: &G::Var, children: &[G::Var]) -> Result<G::Var, NumericError> {
        if children.is_empty() {
            return Err(NumericError::EmptySequence);
        }
        let fwd = Self::run(g, &self.forward, core::iter::once(label).chain(children.iter()))?;
        let bwd = Self::run(g, &self.backward, core::iter::once(label).chain(children.iter().rev()))?;
        let both = g.concat(&[fwd, bwd]);
        let w = g.param(self.weight);
        let b = g.param(self.bias);
        let z = g.affine(&w, &both, &b);
        Ok(g.tanh(&z))
    }

    fn run<'v, G: Graph>(g: &mut G, cell: &LstmCell, inputs: impl Iterator<Item = &'v G::Var>) -> Result<G::Var, ShapeError>
    where
        G::Var: 'v,
    {
        let mut h = g.zeros(cell.hidden_dim);
        let mut c = g.zeros(cell.hidden_dim);
        for x in inputs {
            (h, c) = cell.step(g, x, &h, &c)?;
        }
        Ok(h)
    }
}
