use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::tensor::{Shape, Tensor};

/// Index of a parameter inside its [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Param {
    name: String,
    tensor: Tensor,
}

/// Named model parameters in registration order.
///
/// Registration order is the canonical order used for checkpoints.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(self.params.iter().all(|p| p.name != name), "duplicate parameter {name}");
        self.params.push(Param { name, tensor });
        ParamId(self.params.len() - 1)
    }

    /// Uniform in `[-scale, scale]`.
    pub fn add_uniform<R: Rng>(&mut self, name: impl Into<String>, shape: Shape, scale: f64, rng: &mut R) -> ParamId {
        let data = (0..shape.len()).map(|_| rng.random_range(-scale..=scale)).collect();
        self.add(name, Tensor::new(shape, data))
    }

    pub fn add_constant(&mut self, name: impl Into<String>, shape: Shape, value: f64) -> ParamId {
        self.add(name, Tensor::new(shape, vec![value; shape.len()]))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].tensor
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].tensor
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p.name.as_str(), &p.tensor))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.params.iter().map(|p| p.tensor.len()).sum()
    }

    /// Sets every value to zero (handy for fixed-point tests).
    pub fn zero_all(&mut self) {
        for p in &mut self.params {
            p.tensor.data_mut().fill(0.0);
        }
    }

    /// Replaces all values from one flat buffer in canonical order.
    pub fn load_flat(&mut self, values: &[f64]) -> Result<(), usize> {
        if values.len() != self.numel() {
            return Err(self.numel());
        }
        let mut offset = 0;
        for p in &mut self.params {
            let n = p.tensor.len();
            p.tensor.data_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.params.iter().flat_map(|p| p.tensor.data().iter().copied()).collect()
    }
}

/// Per-parameter gradient buffers aligned with a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn new(store: &ParamStore) -> Self {
        Gradients { grads: vec![None; store.len()] }
    }

    pub fn get(&self, id: ParamId) -> Option<&[f64]> {
        self.grads[id.0].as_deref()
    }

    pub(crate) fn slot(&mut self, id: ParamId, len: usize) -> &mut Vec<f64> {
        self.grads[id.0].get_or_insert_with(|| vec![0.0; len])
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &[f64])> {
        self.grads
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.as_deref().map(|g| (ParamId(i), g)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (ParamId, &mut Vec<f64>)> {
        self.grads
            .iter_mut()
            .enumerate()
            .filter_map(|(i, g)| g.as_mut().map(|g| (ParamId(i), g)))
    }

    pub fn global_norm(&self) -> f64 {
        let sq: f64 = self.iter().flat_map(|(_, g)| g.iter()).map(|x| x * x).sum();
        crate::math::sqrt(sq)
    }

    pub fn scale(&mut self, k: f64) {
        for (_, g) in self.iter_mut() {
            g.iter_mut().for_each(|x| *x *= k);
        }
    }
}
