use alloc::vec::Vec;

use super::kernels;
use super::params::{ParamId, ParamStore};
use super::tensor::{Shape, Tensor};

/// Operations available to model code.
///
/// Shape mismatches inside these primitives are programming errors and
/// panic; public entry points such as [`super::LstmCell::step`] validate
/// their operands first and return [`super::ShapeError`].
pub trait Graph {
    type Var: Clone;

    fn params(&self) -> &ParamStore;
    fn value<'a>(&'a self, v: &'a Self::Var) -> &'a Tensor;

    fn param(&mut self, id: ParamId) -> Self::Var;
    /// One row of a matrix parameter (embedding lookup).
    fn row(&mut self, id: ParamId, row: usize) -> Self::Var;
    fn constant(&mut self, t: Tensor) -> Self::Var;

    /// `w · x + b`.
    fn affine(&mut self, w: &Self::Var, x: &Self::Var, b: &Self::Var) -> Self::Var;
    fn add(&mut self, a: &Self::Var, b: &Self::Var) -> Self::Var;
    fn mul(&mut self, a: &Self::Var, b: &Self::Var) -> Self::Var;
    fn sigmoid(&mut self, a: &Self::Var) -> Self::Var;
    fn tanh(&mut self, a: &Self::Var) -> Self::Var;
    fn neg(&mut self, a: &Self::Var) -> Self::Var;
    fn concat(&mut self, parts: &[Self::Var]) -> Self::Var;
    fn slice(&mut self, a: &Self::Var, start: usize, len: usize) -> Self::Var;
    /// Inverted dropout; the identity outside training.
    fn dropout(&mut self, a: &Self::Var, rate: f64) -> Self::Var;
    fn log_softmax(&mut self, a: &Self::Var, mask: Option<&[bool]>) -> Self::Var;
    fn pick(&mut self, a: &Self::Var, index: usize) -> Self::Var;
    /// Sum of scalars.
    fn sum(&mut self, parts: &[Self::Var]) -> Self::Var;

    fn zeros(&mut self, n: usize) -> Self::Var {
        self.constant(Tensor::zeros(Shape::Vector(n)))
    }
}

/// Plain evaluation without gradient bookkeeping.
pub struct Eager<'p> {
    params: &'p ParamStore,
}

impl<'p> Eager<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Eager { params }
    }
}

pub(crate) fn matrix_dims(t: &Tensor) -> (usize, usize) {
    match t.shape() {
        Shape::Matrix(r, c) => (r, c),
        Shape::Vector(n) => (n, 1),
    }
}

impl Graph for Eager<'_> {
    type Var = Tensor;

    fn params(&self) -> &ParamStore {
        self.params
    }

    fn value<'a>(&'a self, v: &'a Tensor) -> &'a Tensor {
        v
    }

    fn param(&mut self, id: ParamId) -> Tensor {
        self.params.get(id).clone()
    }

    fn row(&mut self, id: ParamId, row: usize) -> Tensor {
        Tensor::vector(self.params.get(id).row(row).to_vec())
    }

    fn constant(&mut self, t: Tensor) -> Tensor {
        t
    }

    fn affine(&mut self, w: &Tensor, x: &Tensor, b: &Tensor) -> Tensor {
        let (rows, cols) = matrix_dims(w);
        Tensor::vector(kernels::affine(w.data(), rows, cols, x.data(), b.data()))
    }

    fn add(&mut self, a: &Tensor, b: &Tensor) -> Tensor {
        Tensor::vector(kernels::zip_with(a.data(), b.data(), |x, y| x + y))
    }

    fn mul(&mut self, a: &Tensor, b: &Tensor) -> Tensor {
        Tensor::vector(kernels::zip_with(a.data(), b.data(), |x, y| x * y))
    }

    fn sigmoid(&mut self, a: &Tensor) -> Tensor {
        Tensor::vector(kernels::sigmoid(a.data()))
    }

    fn tanh(&mut self, a: &Tensor) -> Tensor {
        Tensor::vector(kernels::tanh(a.data()))
    }

    fn neg(&mut self, a: &Tensor) -> Tensor {
        Tensor::vector(a.data().iter().map(|x| -x).collect())
    }

    fn concat(&mut self, parts: &[Tensor]) -> Tensor {
        let data: Vec<f64> = parts.iter().flat_map(|p| p.data().iter().copied()).collect();
        Tensor::vector(data)
    }

    fn slice(&mut self, a: &Tensor, start: usize, len: usize) -> Tensor {
        Tensor::vector(a.data()[start..start + len].to_vec())
    }

    fn dropout(&mut self, a: &Tensor, _rate: f64) -> Tensor {
        a.clone()
    }

    fn log_softmax(&mut self, a: &Tensor, mask: Option<&[bool]>) -> Tensor {
        Tensor::vector(kernels::log_softmax(a.data(), mask))
    }

    fn pick(&mut self, a: &Tensor, index: usize) -> Tensor {
        Tensor::scalar(a.data()[index])
    }

    fn sum(&mut self, parts: &[Tensor]) -> Tensor {
        Tensor::scalar(parts.iter().map(Tensor::item).sum())
    }
}
