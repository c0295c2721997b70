use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AnyModel, Example, ModelError};
use crate::math;
use crate::numcore::{Eager, Graph, NumericError, Optimizer, OptimizerConfig, Tape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    /// Epochs without dev improvement tolerated before stopping.
    pub patience: usize,
    pub optimizer: OptimizerConfig,
    /// Seeds shuffling and dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { max_epochs: 40, patience: 3, optimizer: OptimizerConfig::default(), seed: 1 }
    }
}

/// One line of the training log. Perplexities are per word, so they are
/// comparable across architectures (joint tree+word likelihood for the
/// structural models). Epoch 0 is the untrained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_ppl: f64,
    pub dev_ppl: f64,
    pub lr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status")]
pub enum TrainStatus {
    /// Dev loss stopped improving for `patience` epochs.
    EarlyStopped,
    /// Ran all configured epochs.
    Completed,
    /// A non-finite loss or gradient appeared; best parameters were kept.
    Diverged { epoch: usize, reason: alloc::string::String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub log: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_dev_ppl: f64,
    pub status: TrainStatus,
}

/// Per-word perplexity of `data` without dropout.
pub fn perplexity(model: &AnyModel, data: &[Example]) -> Result<f64, ModelError> {
    let mut g = Eager::new(model.params());
    let mut nll = 0.0;
    let mut words = 0usize;
    for ex in data {
        let l = model.loss(&mut g, ex)?;
        nll += g.value(&l).item();
        words += ex.words.len();
    }
    Ok(math::exp(nll / words.max(1) as f64))
}

/// Minimises summed cross-entropy one sentence at a time; after training
/// the model holds the parameters of the best dev epoch.
pub fn train(
    model: &mut AnyModel,
    train: &[Example],
    dev: &[Example],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainReport, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = Optimizer::new(config.optimizer.clone());
    let mut order: Vec<usize> = (0..train.len()).collect();

    let first = EpochRecord {
        epoch: 0,
        train_ppl: perplexity(model, train)?,
        dev_ppl: perplexity(model, dev)?,
        lr: opt.learning_rate(),
    };
    on_epoch(&first);
    let mut best = (0usize, first.dev_ppl, model.params().flat_values());
    let mut log = alloc::vec![first];
    let mut bad_epochs = 0;
    let mut status = TrainStatus::Completed;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut nll = 0.0;
        let mut words = 0usize;
        let mut failure = None;
        for &i in &order {
            let ex = &train[i];
            let (loss, mut grads) = {
                let mut tape = Tape::training(model.params(), &mut rng);
                let l = model.loss(&mut tape, ex)?;
                (tape.value(&l).item(), tape.backward(l))
            };
            if !loss.is_finite() {
                failure = Some(alloc::format!("non-finite training loss on sentence {i}"));
                break;
            }
            match opt.step(model.params_mut(), &mut grads) {
                Ok(()) => {}
                Err(NumericError::NonFiniteGradient { param }) => {
                    failure = Some(alloc::format!("non-finite gradient in {param} on sentence {i}"));
                    break;
                }
                Err(e) => return Err(e.into()),
            }
            nll += loss;
            words += ex.words.len();
        }
        let dev_ppl = if failure.is_none() { perplexity(model, dev)? } else { f64::NAN };
        if failure.is_none() && !dev_ppl.is_finite() {
            failure = Some(alloc::string::String::from("non-finite dev loss"));
        }
        if let Some(reason) = failure {
            status = TrainStatus::Diverged { epoch, reason };
            break;
        }
        let record = EpochRecord { epoch, train_ppl: math::exp(nll / words.max(1) as f64), dev_ppl, lr: opt.learning_rate() };
        on_epoch(&record);
        log.push(record);
        if dev_ppl < best.1 {
            best = (epoch, dev_ppl, model.params().flat_values());
            bad_epochs = 0;
        } else {
            bad_epochs += 1;
            opt.decay_learning_rate();
            if bad_epochs >= config.patience {
                status = TrainStatus::EarlyStopped;
                break;
            }
        }
    }
    model
        .params_mut()
        .load_flat(&best.2)
        .expect("parameter layout is fixed during training");
    Ok(TrainReport { log, best_epoch: best.0, best_dev_ppl: best.1, status })
}
