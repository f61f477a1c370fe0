//! Character-level convolutional filter that decides whether a message is
//! informative before any actionability tagging happens.

mod gradcheck;
mod network;
mod train;

pub use gradcheck::{gradient_check, gradient_check_with, GradientCheck, DEFAULT_GRADCHECK_SAMPLES};
pub use network::{init_model, CnnConfig, CnnModel, ConvLayer, ParamTensor};
pub use train::{class_weights, mean_loss, train, train_split, EpochLoss, Example, TrainingTrace};

use serde::Serialize;

use crate::corpus::BinaryInformativeness;
use crate::error::{Error, Result};
use crate::text::quantize_chars;

pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InformativenessDecision {
    pub probability_informative: f64,
    pub decision: BinaryInformativeness,
    pub threshold: f64,
}

pub fn check_threshold(threshold: f64) -> Result<()> {
    if threshold > 0.0 && threshold < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("threshold must be in (0, 1), got {threshold}")))
    }
}

/// Informative iff `probability >= threshold`.
pub fn decide(probability: f64, threshold: f64) -> InformativenessDecision {
    InformativenessDecision {
        probability_informative: probability,
        decision: if probability >= threshold {
            BinaryInformativeness::Informative
        } else {
            BinaryInformativeness::NotInformative
        },
        threshold,
    }
}

pub fn classify(model: &CnnModel, text: &str, threshold: f64) -> Result<InformativenessDecision> {
    check_threshold(threshold)?;
    let c = model.config();
    let probs = model.forward(&quantize_chars(text, &c.alphabet, c.max_len))?;
    Ok(decide(probs[BinaryInformativeness::Informative.class_index()], threshold))
}
