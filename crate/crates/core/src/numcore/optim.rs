use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::params::{Gradients, ParamStore};
use super::NumericError;
use crate::math;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    /// Global gradient-norm clip; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Multiplier applied to the learning rate when dev loss stalls.
    pub decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimizerKind::Sgd,
            learning_rate: 0.1,
            clip_norm: Some(5.0),
            decay: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First-order optimizer with optional global-norm clipping.
#[derive(Clone, Debug)]
pub struct Optimizer {
    pub config: OptimizerConfig,
    lr: f64,
    step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(config: OptimizerConfig) -> Self {
        Optimizer { lr: config.learning_rate, config, step: 0, first: Vec::new(), second: Vec::new() }
    }

    pub fn learning_rate(&self) -> f64 {
        self.lr
    }

    pub fn decay_learning_rate(&mut self) {
        self.lr *= self.config.decay;
    }

    /// Applies one update in place. Non-finite gradients abort the step
    /// before anything is modified.
    pub fn step(&mut self, params: &mut ParamStore, grads: &mut Gradients) -> Result<(), NumericError> {
        for (id, g) in grads.iter() {
            if !g.iter().all(|x| x.is_finite()) {
                return Err(NumericError::NonFiniteGradient { param: params.name(id).to_string() });
            }
        }
        if let Some(clip) = self.config.clip_norm {
            let norm = grads.global_norm();
            if norm > clip {
                grads.scale(clip / norm);
            }
        }
        self.step += 1;
        match self.config.kind {
            OptimizerKind::Sgd => {
                for (id, g) in grads.iter() {
                    let lr = self.lr;
                    params.get_mut(id).data_mut().iter_mut().zip(g).for_each(|(p, g)| *p -= lr * g);
                }
            }
            OptimizerKind::Adam => {
                if self.first.len() != params.len() {
                    self.first = params.iter().map(|(_, _, t)| vec![0.0; t.len()]).collect();
                    self.second = self.first.clone();
                }
                let (b1, b2, eps) = (self.config.beta1, self.config.beta2, self.config.epsilon);
                let t = self.step as f64;
                let c1 = 1.0 - math::pow(b1, t);
                let c2 = 1.0 - math::pow(b2, t);
                for (id, g) in grads.iter() {
                    let m = &mut self.first[id.index()];
                    let v = &mut self.second[id.index()];
                    let p = params.get_mut(id).data_mut();
                    for k in 0..g.len() {
                        m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                        v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                        p[k] -= self.lr * (m[k] / c1) / (math::sqrt(v[k] / c2) + eps);
                    }
                }
            }
        }
        Ok(())
    }
}
