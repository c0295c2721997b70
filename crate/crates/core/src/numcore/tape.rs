//! Gradient tape: records operations during the forward pass and replays
//! them in exact reverse order to accumulate parameter gradients.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::graph::{matrix_dims, Graph};
use super::kernels;
use super::params::{Gradients, ParamId, ParamStore};
use super::tensor::{Shape, Tensor};
use crate::math;

/// Position of a recorded value on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodeId(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(ParamId),
    Row(ParamId, usize),
    Affine(NodeId, NodeId, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Neg(NodeId),
    Concat(Vec<NodeId>),
    Slice(NodeId, usize),
    Dropout(NodeId, Vec<f64>),
    LogSoftmax(NodeId),
    Pick(NodeId, usize),
    Sum(Vec<NodeId>),
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

pub struct Tape<'a> {
    params: &'a ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
    rng: Option<&'a mut ChaCha8Rng>,
}

impl<'a> Tape<'a> {
    /// A tape whose dropout is the identity.
    pub fn new(params: &'a ParamStore) -> Self {
        Tape { params, nodes: Vec::new(), param_nodes: vec![None; params.len()], rng: None }
    }

    /// A tape in training mode: dropout masks are drawn from `rng`.
    pub fn training(params: &'a ParamStore, rng: &'a mut ChaCha8Rng) -> Self {
        Tape { rng: Some(rng), ..Tape::new(params) }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        NodeId(self.nodes.len() - 1)
    }

    fn data(&self, id: NodeId) -> &[f64] {
        self.nodes[id.0].value.data()
    }

    /// Reverse sweep from a scalar `loss`; returns gradients for every
    /// parameter that influenced it.
    pub fn backward(&self, loss: NodeId) -> Gradients {
        assert_eq!(self.nodes[loss.0].value.len(), 1, "backward needs a scalar loss");
        let mut grads: Vec<Option<Vec<f64>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);
        let mut out = Gradients::new(self.params);

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Constant => {}
                Op::Param(pid) => {
                    let slot = out.slot(*pid, g.len());
                    slot.iter_mut().zip(&g).for_each(|(s, v)| *s += v);
                }
                Op::Row(pid, row) => {
                    let (_, cols) = matrix_dims(self.params.get(*pid));
                    let slot = out.slot(*pid, self.params.get(*pid).len());
                    slot[row * cols..(row + 1) * cols].iter_mut().zip(&g).for_each(|(s, v)| *s += v);
                }
                Op::Affine(w, x, b) => {
                    let (rows, cols) = matrix_dims(&self.nodes[w.0].value);
                    let wv = self.data(*w);
                    let xv = self.data(*x);
                    let mut gw = vec![0.0; rows * cols];
                    let mut gx = vec![0.0; cols];
                    for r in 0..rows {
                        let gr = g[r];
                        if gr == 0.0 {
                            continue;
                        }
                        let wrow = &wv[r * cols..(r + 1) * cols];
                        let gwrow = &mut gw[r * cols..(r + 1) * cols];
                        for c in 0..cols {
                            gwrow[c] = gr * xv[c];
                            gx[c] += gr * wrow[c];
                        }
                    }
                    accumulate(&mut grads, *w, &gw);
                    accumulate(&mut grads, *x, &gx);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &g);
                    accumulate(&mut grads, *b, &g);
                }
                Op::Mul(a, b) => {
                    let ga: Vec<f64> = g.iter().zip(self.data(*b)).map(|(x, y)| x * y).collect();
                    let gb: Vec<f64> = g.iter().zip(self.data(*a)).map(|(x, y)| x * y).collect();
                    accumulate(&mut grads, *a, &ga);
                    accumulate(&mut grads, *b, &gb);
                }
                Op::Sigmoid(a) => {
                    let ga: Vec<f64> = g.iter().zip(node.value.data()).map(|(g, s)| g * s * (1.0 - s)).collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Tanh(a) => {
                    let ga: Vec<f64> = g.iter().zip(node.value.data()).map(|(g, t)| g * (1.0 - t * t)).collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Neg(a) => {
                    let ga: Vec<f64> = g.iter().map(|x| -x).collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for p in parts {
                        let n = self.nodes[p.0].value.len();
                        accumulate(&mut grads, *p, &g[offset..offset + n]);
                        offset += n;
                    }
                }
                Op::Slice(a, start) => {
                    let mut ga = vec![0.0; self.nodes[a.0].value.len()];
                    ga[*start..*start + g.len()].copy_from_slice(&g);
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Dropout(a, mask) => {
                    let ga: Vec<f64> = g.iter().zip(mask).map(|(g, m)| g * m).collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::LogSoftmax(a) => {
                    // d/dx_j = g_j - p_j Σ_k g_k over unmasked entries
                    let lp = node.value.data();
                    let total: f64 = g.iter().zip(lp).filter(|(_, l)| l.is_finite()).map(|(g, _)| g).sum();
                    let ga: Vec<f64> = g
                        .iter()
                        .zip(lp)
                        .map(|(g, &l)| if l.is_finite() { g - math::exp(l) * total } else { 0.0 })
                        .collect();
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Pick(a, index) => {
                    let mut ga = vec![0.0; self.nodes[a.0].value.len()];
                    ga[*index] = g[0];
                    accumulate(&mut grads, *a, &ga);
                }
                Op::Sum(parts) => {
                    for p in parts {
                        accumulate(&mut grads, *p, &g);
                    }
                }
            }
        }
        out
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], id: NodeId, g: &[f64]) {
    match &mut grads[id.0] {
        Some(existing) => existing.iter_mut().zip(g).for_each(|(e, v)| *e += v),
        slot @ None => *slot = Some(g.to_vec()),
    }
}

impl Graph for Tape<'_> {
    type Var = NodeId;

    fn params(&self) -> &ParamStore {
        self.params
    }

    fn value<'b>(&'b self, v: &'b NodeId) -> &'b Tensor {
        &self.nodes[v.0].value
    }

    fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(node) = self.param_nodes[id.0] {
            return node;
        }
        let node = self.push(self.params.get(id).clone(), Op::Param(id));
        self.param_nodes[id.0] = Some(node);
        node
    }

    fn row(&mut self, id: ParamId, row: usize) -> NodeId {
        let value = Tensor::vector(self.params.get(id).row(row).to_vec());
        self.push(value, Op::Row(id, row))
    }

    fn constant(&mut self, t: Tensor) -> NodeId {
        self.push(t, Op::Constant)
    }

    fn affine(&mut self, w: &NodeId, x: &NodeId, b: &NodeId) -> NodeId {
        let (rows, cols) = matrix_dims(&self.nodes[w.0].value);
        let v = kernels::affine(self.data(*w), rows, cols, self.data(*x), self.data(*b));
        self.push(Tensor::vector(v), Op::Affine(*w, *x, *b))
    }

    fn add(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = kernels::zip_with(self.data(*a), self.data(*b), |x, y| x + y);
        self.push(Tensor::vector(v), Op::Add(*a, *b))
    }

    fn mul(&mut self, a: &NodeId, b: &NodeId) -> NodeId {
        let v = kernels::zip_with(self.data(*a), self.data(*b), |x, y| x * y);
        self.push(Tensor::vector(v), Op::Mul(*a, *b))
    }

    fn sigmoid(&mut self, a: &NodeId) -> NodeId {
        let v = kernels::sigmoid(self.data(*a));
        self.push(Tensor::vector(v), Op::Sigmoid(*a))
    }

    fn tanh(&mut self, a: &NodeId) -> NodeId {
        let v = kernels::tanh(self.data(*a));
        self.push(Tensor::vector(v), Op::Tanh(*a))
    }

    fn neg(&mut self, a: &NodeId) -> NodeId {
        let v = self.data(*a).iter().map(|x| -x).collect();
        self.push(Tensor::vector(v), Op::Neg(*a))
    }

    fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let v: Vec<f64> = parts.iter().flat_map(|p| self.data(*p).iter().copied()).collect();
        self.push(Tensor::vector(v), Op::Concat(parts.to_vec()))
    }

    fn slice(&mut self, a: &NodeId, start: usize, len: usize) -> NodeId {
        let v = self.data(*a)[start..start + len].to_vec();
        self.push(Tensor::vector(v), Op::Slice(*a, start))
    }

    fn dropout(&mut self, a: &NodeId, rate: f64) -> NodeId {
        let Some(rng) = self.rng.as_deref_mut() else { return *a };
        if rate <= 0.0 {
            return *a;
        }
        let keep = 1.0 / (1.0 - rate);
        let n = self.nodes[a.0].value.len();
        let mask: Vec<f64> = (0..n).map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep }).collect();
        let v = kernels::zip_with(self.data(*a), &mask, |x, m| x * m);
        self.push(Tensor::vector(v), Op::Dropout(*a, mask))
    }

    fn log_softmax(&mut self, a: &NodeId, mask: Option<&[bool]>) -> NodeId {
        let v = kernels::log_softmax(self.data(*a), mask);
        self.push(Tensor::vector(v), Op::LogSoftmax(*a))
    }

    fn pick(&mut self, a: &NodeId, index: usize) -> NodeId {
        let v = self.data(*a)[index];
        self.push(Tensor::scalar(v), Op::Pick(*a, index))
    }

    fn sum(&mut self, parts: &[NodeId]) -> NodeId {
        let v = parts.iter().map(|p| self.data(*p)[0]).sum();
        self.push(Tensor::scalar(v), Op::Sum(parts.to_vec()))
    }

    fn zeros(&mut self, n: usize) -> NodeId {
        self.constant(Tensor::zeros(Shape::Vector(n)))
    }
}
