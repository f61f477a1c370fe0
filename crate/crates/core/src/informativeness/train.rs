use log::{debug, info};
use rand::seq::SliceRandom;
use serde::Serialize;

use super::network::CnnModel;
use crate::corpus::{BinaryInformativeness, LabeledMessage, Source, Split};
use crate::error::{Error, Result};
use crate::seed;
use crate::text::{quantize_chars, CharSequence};

/// A quantized training example.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub chars: CharSequence,
    pub label: BinaryInformativeness,
    pub source: Source,
}

impl Example {
    pub fn from_labeled(m: &LabeledMessage, model: &CnnModel) -> Self {
        let c = model.config();
        Example {
            chars: quantize_chars(m.message.text(), &c.alphabet, c.max_len),
            label: m.label,
            source: m.message.source(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub training_loss: f64,
    pub validation_loss: f64,
}

/// Losses per epoch. Epoch 0 is the model before any update.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrainingTrace {
    pub epochs: Vec<EpochLoss>,
    pub selected_epoch: usize,
    /// First epoch whose training loss fell strictly below its validation loss.
    pub crossover_epoch: Option<usize>,
}

/// Inverse class frequency over the training set, unless the config fixes them.
pub fn class_weights(model: &CnnModel, train: &[Example]) -> Result<[f64; 2]> {
    if let Some(w) = model.config().class_weights {
        return Ok(w);
    }
    let mut counts = [0usize; 2];
    for e in train {
        counts[e.label.class_index()] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::Insufficient(format!(
            "training set needs both classes (not informative {}, informative {})",
            counts[0], counts[1]
        )));
    }
    let n = train.len() as f64;
    Ok(counts.map(|c| n / (2.0 * c as f64)))
}

fn example_weight(e: &Example, class_w: &[f64; 2], ccsid_weight: f64) -> f64 {
    let source = if e.source == Source::Ccsid { ccsid_weight } else { 1.0 };
    class_w[e.label.class_index()] * source
}

/// Weighted mean cross-entropy over `set`.
pub fn mean_loss(model: &CnnModel, set: &[Example], class_w: &[f64; 2]) -> Result<f64> {
    let (mut total, mut weight) = (0.0, 0.0);
    for e in set {
        let w = example_weight(e, class_w, model.config().ccsid_weight);
        total += model.loss(&e.chars, e.label.class_index(), w)?;
        weight += w;
    }
    Ok(total / weight)
}

/// Momentum SGD with loss-crossover early stopping. Returns the checkpoint
/// with the lowest validation loss among epochs before the crossover.
pub fn train(model: &CnnModel, train: &[Example], validation: &[Example]) -> Result<(CnnModel, TrainingTrace)> {
    if train.is_empty() || validation.is_empty() {
        return Err(Error::Empty("training and validation sets must both be non-empty".into()));
    }
    let config = model.config().clone();
    let class_w = class_weights(model, train)?;
    let mut current = model.clone();
    let mut velocity = vec![0.0; current.params.len()];
    let mut grad = vec![0.0; current.params.len()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut rng = seed::rng(seed::derive_seed(config.seed, "shuffle"));

    let record = |m: &CnnModel, epoch: usize| -> Result<EpochLoss> {
        let training_loss = mean_loss(m, train, &class_w)?;
        let validation_loss = mean_loss(m, validation, &class_w)?;
        if !training_loss.is_finite() || !validation_loss.is_finite() || !m.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                learning_rate: config.learning_rate,
            });
        }
        Ok(EpochLoss {
            epoch,
            training_loss,
            validation_loss,
        })
    };

    let first = record(&current, 0)?;
    let mut trace = TrainingTrace {
        epochs: vec![first],
        selected_epoch: 0,
        crossover_epoch: None,
    };
    let mut best = (first.validation_loss, current.params.clone());

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut batch_weight = 0.0;
            for &i in batch {
                let e = &train[i];
                let w = example_weight(e, &class_w, config.ccsid_weight);
                let cache = current.forward_cached(&e.chars)?;
                current.backward(&e.chars, &cache, e.label.class_index(), w, &mut grad);
                batch_weight += w;
            }
            for ((p, v), g) in current.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g / batch_weight;
                *p += *v;
            }
        }
        let losses = record(&current, epoch)?;
        debug!(
            "epoch {epoch}: training {:.6}, validation {:.6}",
            losses.training_loss, losses.validation_loss
        );
        trace.epochs.push(losses);
        if losses.training_loss < losses.validation_loss {
            info!("loss crossover at epoch {epoch}; keeping epoch {}", trace.selected_epoch);
            trace.crossover_epoch = Some(epoch);
            break;
        }
        if losses.validation_loss < best.0 {
            best = (losses.validation_loss, current.params.clone());
            trace.selected_epoch = epoch;
        }
    }
    current.params = best.1;
    Ok((current, trace))
}

/// Quantize a split and train on it.
pub fn train_split(model: &CnnModel, split: &Split) -> Result<(CnnModel, TrainingTrace)> {
    let t: Vec<Example> = split.train.iter().map(|m| Example::from_labeled(m, model)).collect();
    let v: Vec<Example> = split.validation.iter().map(|m| Example::from_labeled(m, model)).collect();
    train(model, &t, &v)
}
